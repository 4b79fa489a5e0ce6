"""Acceptance criteria 1-9, each run at its stated size with zero tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) and
then asserts, so a failing criterion is visible both ways.
"""
import json
import os
import random
from fractions import Fraction as F


from conftest import record_acceptance
from gurarii import cli
from gurarii import linalg as la
from gurarii.amalgam import amalgamate, extend_isometry, pushout_l1, quotient_norm_lp
from gurarii.certify import verify_trace
from gurarii.engine import (ChainSpace, ChainSubspace, approximate_inverse, back_and_forth,
                            embed_universal, schedule_make, step_bound)
from gurarii.instances import random_chain, random_injective_map, random_space
from gurarii.io import write_chain, write_space
from gurarii.kernel import (VertexSystem, describe_v, lp_solve, polar_dual,
                            vertex_enumeration)
from gurarii.operators import LinearMap, compose, defect, difference, op_norm
from gurarii.spaces import l1, linf, make_space, subspace, zero_space


def _slack(rng):
    return F(rng.randint(1, 20), rng.choice([10, 20, 40]))


def _bounded_space(rng, dim):
    # at most 12 ball vertices
    return random_space(rng, dim, extra=rng.randint(0, 6 - dim))


def test_criterion_1_amalgam_suite():
    rng = random.Random(20240101)
    failures, n = [], 200
    for k in range(n):
        dx = rng.randint(1, 3)
        dy = rng.randint(dx, 3)
        X, Y = _bounded_space(rng, dx), _bounded_space(rng, dy)
        assert len(X.ball_vertices) <= 12 and len(Y.ball_vertices) <= 12
        f = random_injective_map(rng, X, Y)
        eps = defect(f).epsilon_star + _slack(rng)
        cert = amalgamate(X, Y, f, eps)
        # fresh maps, nothing cached from the construction
        i = LinearMap(X, cert.Z, cert.i.matrix)
        j = LinearMap(Y, cert.Z, cert.j.matrix)
        ff = LinearMap(X, Y, f.matrix)
        gap = op_norm(difference(compose(j, ff), i))[0]
        ok = (defect(i).epsilon_star == 0 and defect(j).epsilon_star == 0 and gap <= eps
              and gap == cert.bound_achieved and cert.Z.dimension == dx + dy)
        if not ok:
            failures.append(k)
    passed = not failures
    record_acceptance(1, "amalgam certificate suite", passed, f"{n - len(failures)}/{n} instances")
    assert passed, failures


def _hand_worked_example():
    """The cut-off amalgam in dimension 1 with f = 3/2, evaluated straight from the formulas."""
    eps = F(3, 5)
    c = F(3, 2)
    eps1 = eps / (1 + eps)
    x_duals = [F(1), F(-1)]
    y_duals = [F(1), F(-1)]

    def phi_X(x, y):
        # x* f^-1 has dual norm |x*| / c on the line
        return max(abs(xs * x + (1 / (abs(xs) / c)) * (xs / c) * y) for xs in x_duals)

    def phi_Y(x, y):
        return max(abs(ys * y + (1 / (abs(ys) * c)) * (ys * c) * x) for ys in y_duals)

    def znorm(x, y):
        return max(phi_X(x, y), phi_Y(x, y), eps1 * abs(x), eps1 * abs(y))

    # j f - i on the unit sphere {+-1} of the line
    bound = max(znorm(-t, c * t) for t in (F(1), F(-1)))
    return eps1, bound


def test_criterion_2_worked_example():
    eps1_hand, bound_hand = _hand_worked_example()
    line = make_space(VertexSystem(1, ((F(1),), (F(-1),))))
    cert = amalgamate(line, line, LinearMap(line, line, ((F(3, 2),),)), F(3, 5))
    passed = (eps1_hand == F(3, 8) and bound_hand == F(9, 16)
              and cert.eps1 == eps1_hand and cert.bound_achieved == bound_hand)
    record_acceptance(2, "worked 1-dimensional example", passed,
                      f"eps1={la.qstr(cert.eps1)} bound={la.qstr(cert.bound_achieved)}")
    assert passed


def test_criterion_3_quotient_consistency():
    rng = random.Random(31337)
    n, samples, bad = 50, 20, []
    for k in range(n):
        dx = rng.randint(1, 2)
        dy = rng.randint(dx + 1, 3)
        X, Y = _bounded_space(rng, dx), _bounded_space(rng, dy)
        f = random_injective_map(rng, X, Y)
        cert = amalgamate(X, Y, f, defect(f).epsilon_star + _slack(rng))
        assert cert.kind == "quotient"
        for _ in range(samples):
            x = tuple(F(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(dx))
            y = tuple(F(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(dy))
            if cert.Z.norm(x + y) != quotient_norm_lp(cert, x, y):
                bad.append(k)
                break
    passed = not bad
    record_acceptance(3, "quotient norm = inf-over-v LP", passed, f"{n} amalgams x {samples} points")
    assert passed, bad


def test_criterion_4_pushout_suite():
    rng = random.Random(4242)
    n, bad = 100, []
    for k in range(n):
        d1 = rng.randint(1, 2)
        d0 = rng.randint(0, d1)
        X1 = _bounded_space(rng, d1)
        basis = []
        while len(basis) < d0:
            v = tuple(F(rng.randint(-2, 2)) for _ in range(d1))
            if len(la.independent_subset(basis + [v])) == len(basis) + 1:
                basis.append(v)
        X0, inc = subspace(X1, basis)
        dy = rng.randint(d0, 2) if d0 else rng.randint(0, 2)
        Y0 = _bounded_space(rng, dy) if dy else zero_space()
        f = random_injective_map(rng, X0, Y0)
        po = pushout_l1(X0, X1, inc, Y0, f)
        ok = all(po.checks().values())
        ok &= po.W.dimension == d1 + dy - d0
        ok &= compose(po.f_prime, inc).matrix == compose(po.y_embed, f).matrix
        ok &= defect(LinearMap(Y0, po.W, po.y_embed.matrix)).epsilon_star == 0
        eps = defect(f).epsilon_star + _slack(rng)
        ext = extend_isometry(X0, X1, inc, Y0, f, eps)
        ok &= all(ext.checks().values())
        ok &= defect(LinearMap(X1, ext.Y1, ext.g.matrix)).epsilon_star == 0
        ok &= defect(LinearMap(Y0, ext.Y1, ext.y_embed.matrix)).epsilon_star == 0
        ok &= ext.distance < eps
        if not ok:
            bad.append(k)
    passed = not bad
    record_acceptance(4, "pushout and extension suite", passed, f"{n - len(bad)}/{n} instances")
    assert passed, bad


def test_criterion_5_approximate_inverse_suite():
    rng = random.Random(5050)
    n, bad = 100, []
    for k in range(n):
        de = rng.randint(1, 3)
        E = ChainSpace.from_space(_bounded_space(rng, de), "E")
        dx = rng.randint(1, min(de, 2))
        basis = []
        while len(basis) < dx:
            v = tuple(F(rng.randint(-2, 2)) for _ in range(de))
            if len(la.independent_subset(basis + [v])) == len(basis) + 1:
                basis.append(v)
        X = ChainSubspace.build(E, 0, basis)
        Y = _bounded_space(rng, rng.randint(dx, 2))
        f = random_injective_map(rng, X.space, Y)
        eps = defect(f).epsilon_star + _slack(rng)
        delta = F(1, rng.randint(2, 20))
        cert = approximate_inverse(E, X, f, eps, delta)
        g = LinearMap(Y, E.top, cert.g.matrix)
        dist = op_norm(difference(compose(g, LinearMap(X.space, Y, f.matrix)), X.embedding()))[0]
        ok = (dist < eps and dist == cert.distance
              and (1 + cert.delta_prime) * cert.eps_prime < eps
              and cert.eps_prime < eps and 0 < cert.delta_prime < delta
              and defect(g).epsilon_star <= cert.delta_prime)
        if not ok:
            bad.append(k)
    passed = not bad
    record_acceptance(5, "approximate inverse suite", passed, f"{n - len(bad)}/{n} instances")
    assert passed, bad


def _line():
    return make_space(VertexSystem(1, ((F(1),), (F(-1),))), "line")


def _line_chain(top, name):
    line = _line()
    return ChainSpace([line, top], [LinearMap(line, top, ((F(1),), (F(0),)))], name=name)


def _hexagon():
    pts = [(F(1), F(0)), (F(1, 2), F(1)), (F(-1, 2), F(1))]
    return make_space(VertexSystem(2, tuple(pts + [tuple(-x for x in p) for p in pts])), "hexagon")


def test_criterion_6_back_and_forth():
    details, ok = [], True
    # worked seed f = 3/2 between independently built chains over the line
    E, Fc = _line_chain(linf(2), "E"), _line_chain(_hexagon(), "F")
    X = ChainSubspace.build(E, 0, [(F(1),)])
    f = LinearMap(X.space, Fc.stages[0], ((F(3, 2),),))
    sched = schedule_make(F(3, 5), F(11, 20), F(1, 50), 4)
    tr = back_and_forth(E, Fc, X, f, sched)
    ok &= all(tr.checks().values())
    ok &= all(s.drift[0] <= step_bound(s.eps_n, s.eps_next) for s in tr.steps)
    ok &= tr.final_distance[0] < F(3, 5) and len(tr.steps) >= 4
    details.append(f"worked seed distance {la.qstr(tr.final_distance[0])}")
    # random chains of growing dimension
    for seed in (1, 2):
        E, Fc = random_chain(seed, [2, 3, 3, 4], "E"), random_chain(100 + seed, [2, 3, 4], "F")
        X = ChainSubspace.build(E, 0, [(F(1), F(0))])
        # a random direction, scaled so that f stretches every vector by 21/20
        r = random.Random(seed)
        u = (F(r.randint(1, 4)), F(r.randint(-4, 4)))
        scale = F(21, 20) * X.space.norm((F(1),)) / Fc.stages[0].norm(u)
        f = LinearMap(X.space, Fc.stages[0], tuple((scale * c,) for c in u))
        assert defect(f).epsilon_star == F(1, 20)
        sched = schedule_make(F(1, 2), F(1, 10), F(1, 4), 4)
        tr = back_and_forth(E, Fc, X, f, sched)
        ok &= all(tr.checks().values()) and tr.final_distance[0] < sched.target_eps
        details.append(f"random seed {seed} distance {la.qstr(tr.final_distance[0])}")
    # identity seed on one chain object
    E = _line_chain(linf(2), "E")
    X = ChainSubspace.build(E, 0, [(F(1),)])
    tr = back_and_forth(E, E, X, LinearMap(X.space, E.stages[0], ((F(1),),)), schedule_make(F(1, 2)))
    ok &= tr.final_distance[0] == 0 and all(tr.checks().values())
    # closed-form tail against explicit partial sums
    s = schedule_make(F(1, 10), F(1, 100), F(1, 4), 6)
    terms = [s.eps0 * s.ratio ** n for n in range(60)]
    partial = sum((step_bound(terms[n], terms[n + 1]) for n in range(59)), F(0))
    m = 59
    tail_m = (s.eps0 * s.ratio ** m / (1 - s.ratio) + s.eps0 * s.ratio ** (m + 1) / (1 - s.ratio)
              + 2 * s.eps0 ** 2 * s.ratio ** (2 * m + 1) / (1 - s.ratio ** 2))
    ok &= partial + tail_m == s.total and s.budget_lhs < F(9, 100)
    record_acceptance(6, "back-and-forth at depth 4", bool(ok), "; ".join(details))
    assert ok


def test_criterion_7_universality():
    ok, details = True, []
    line = _line()
    diamond = l1(2)
    X = ChainSpace([zero_space(), line, diamond],
                   [LinearMap(zero_space(), line, ((),)), LinearMap(line, diamond, ((F(1),), (F(0),)))])
    rc = random_chain(7, [1, 2, 3])
    rX = ChainSpace([zero_space()] + rc.stages,
                    [LinearMap(zero_space(), rc.stages[0], ((),))] + rc.inclusions)
    cases = [("l1^2", X, ChainSpace.from_space(_line(), "G")),
             ("random chain", rX, ChainSpace.from_space(random_space(8, 2), "G"))]
    for label, Xc, G in cases:
        depth = 5
        tr = embed_universal(Xc, G, depth)
        ok &= all(tr.checks().values()) and len(tr.steps) == depth
        for st in tr.steps:
            ok &= st.defect_next.epsilon_star < F(1, 2 ** (st.n + 1)) <= F(1, 2 ** st.n)
            ok &= st.drift[0] < 2 * F(1, 2 ** st.n)
        # telescoping in G's top
        for n in range(depth):
            for k in range(1, depth - n + 1):
                a = Xc.presentation_stage(n)
                b = Xc.presentation_stage(n + k)
                inc = Xc.transport(a, b)
                fnk = LinearMap(Xc.stages[b], G.top, tr.map_in_top(G, n + k))
                fn = LinearMap(Xc.stages[a], G.top, tr.map_in_top(G, n))
                d = op_norm(difference(compose(fnk, LinearMap(Xc.stages[a], Xc.stages[b], inc)), fn))[0]
                ok &= d < sum((2 * F(1, 2 ** m) for m in range(n, n + k)), F(0))
        details.append(f"{label}: G top dim {G.top.dimension}")
    record_acceptance(7, "universality at depth 5", bool(ok), "; ".join(details))
    assert ok


def _random_polytope(rng, d):
    if rng.random() < 0.5:
        return random_space(rng, d, extra=rng.randint(0, 3)).ball_vertices
    # asymmetric: a simplex around the origin plus random points
    pts = [tuple(F(1) if i == k else F(0) for i in range(d)) for k in range(d)]
    pts.append(tuple(F(-1) for _ in range(d)))
    for _ in range(rng.randint(0, 4)):
        pts.append(tuple(F(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(d)))
    return VertexSystem(d, tuple(pts))


def test_criterion_8_kernel_regression():
    rng = random.Random(888)
    n, bad = 500, []
    for k in range(n):
        d = rng.randint(2, 4)
        P = _random_polytope(rng, d)
        V, H = describe_v(P)
        ok = vertex_enumeration(H) == V
        symmetric = all(tuple(-x for x in p) in set(V.points) for p in V.points)
        if symmetric:
            ok &= polar_dual(polar_dual(V)) == V and polar_dual(polar_dual(H)) == H
            ok &= polar_dual(V) == VertexSystem(d, tuple(H.normals))
        c = tuple(F(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(d))
        sol = lp_solve(c, H)
        ok &= sol.check(c, H) and sol.value == max(la.dot(c, v) for v in V)
        sol = lp_solve(c, H, sense="min")
        ok &= sol.check(c, H) and sol.value == min(la.dot(c, v) for v in V)
        if not ok:
            bad.append(k)
    passed = not bad
    record_acceptance(8, "kernel regression", passed, f"{n - len(bad)}/{n} polytopes")
    assert passed, bad


def _leaves(obj, path=()):
    if isinstance(obj, dict):
        for key, v in obj.items():
            yield from _leaves(v, path + (key,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _leaves(v, path + (i,))
    elif isinstance(obj, bool):
        return
    elif isinstance(obj, int) or (isinstance(obj, str) and any(c.isdigit() for c in obj)):
        yield path


def _mutate(data, path):
    out = json.loads(json.dumps(data))
    node = out
    for key in path[:-1]:
        node = node[key]
    v = node[path[-1]]
    if isinstance(v, int):
        node[path[-1]] = v + 1
    else:
        # change one digit: a single-byte edit
        pos = max(i for i, c in enumerate(v) if c.isdigit())
        node[path[-1]] = v[:pos] + str((int(v[pos]) + 1) % 10) + v[pos + 1:]
    return out


def _run(argv):
    return cli.main(argv)


def test_criterion_9_cli_determinism_and_tamper(tmp_path, capsys):
    line = _line()
    write_space(str(tmp_path / "line.json"), line, name="line")
    (tmp_path / "f.json").write_text(json.dumps({"domain": "line", "codomain": "line", "matrix": [["3/2"]]}))
    write_chain(str(tmp_path / "E"), _line_chain(linf(2), "E"))
    write_chain(str(tmp_path / "F"), _line_chain(_hexagon(), "F"))
    write_chain(str(tmp_path / "X"), ChainSpace.from_space(l1(2), with_zero=True))
    write_chain(str(tmp_path / "G"), ChainSpace.from_space(line, "G"))
    outputs = {}
    for run in ("a", "b"):
        out = tmp_path / run
        codes = [
            _run(["amalgamate", str(tmp_path / "line.json"), str(tmp_path / "line.json"),
                  str(tmp_path / "f.json"), "--eps", "3/5", "--out", str(out / "am")]),
            _run(["back-and-forth", str(tmp_path / "E"), str(tmp_path / "F"), str(tmp_path / "f.json"),
                  "--target-eps", "3/5", "--eps0", "11/20", "--ratio", "1/50", "--depth", "4",
                  "--out", str(out / "bf")]),
            _run(["embed", str(tmp_path / "X"), str(tmp_path / "G"), "--depth", "4", "--out", str(out / "emb")]),
        ]
        assert codes == [0, 0, 0]
        files = {}
        for root, _, names in os.walk(out):
            for name in names:
                p = os.path.join(root, name)
                text = open(p, "rb").read()
                if name == "report.json":
                    rep = json.loads(text)
                    rep.pop("duration_seconds")
                    text = json.dumps(rep, sort_keys=True).encode()
                files[os.path.relpath(p, out)] = text
        outputs[run] = files
    identical = outputs["a"] == outputs["b"] and len(outputs["a"]) >= 8
    capsys.readouterr()

    traces = [json.loads(outputs["a"][os.path.join(d, "trace.json")]) for d in ("bf", "emb")]
    fresh_ok = all(all(ok for _, ok, _ in verify_trace(t)) for t in traces)
    rng = random.Random(9)
    mutated = rejected = math_rejected = 0
    for t, sample in ((traces[0], 120), (traces[1], None)):
        paths = list(_leaves(t))
        if sample is not None:
            paths = rng.sample(paths, sample)
        for p in paths:
            res = verify_trace(_mutate(t, p))
            mutated += 1
            failed = [name for name, ok, _ in res if not ok]
            rejected += bool(failed)
            math_rejected += any(name != "digest" for name in failed)
    # and through the command line, on one edited witness
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(_mutate(traces[0], ("steps", 0, "drift", "value"))))
    code = _run(["verify", str(bad)])
    printed = capsys.readouterr().out
    cli_ok = code == 1 and "step[0].drift.value" in printed
    passed = identical and fresh_ok and rejected == mutated and cli_ok
    record_acceptance(9, "CLI determinism and tamper detection", passed,
                      f"{len(outputs['a'])} files identical; {rejected}/{mutated} mutations rejected "
                      f"({math_rejected} by a mathematical check)")
    assert passed
