"""Command-line interface: curve ingestion, evaluation, verification, probes.

All reports are JSON on stdout (diagnostics on stderr); complex numbers
serialize as [re, im] pairs and matrices as row-major nested arrays.
Exit codes: 0 success, 1 failed verification check, 2 argument/curve
errors, 3 quadrature non-convergence, 4 evaluation on the theta divisor.

Report schemas (stable):

* ``periods``: {genus, branch_points, A, B, Omega, symmetry_residual,
  min_im_eigenvalue}.
* ``verify``: {suite, checks: [{name, residual, tolerance, pass}], pass}.
* ``probe`` (json): {genus, n_samples, seed, collision_tol, floor,
  n_rejected, points, coordinates, collisions: [{i, j,
  relative_distance, trivial, kind}], n_nontrivial}; (csv): one row per
  sample with columns e_re_*/e_im_* then the upper-triangle Klein
  coordinates c_re_ij/c_im_ij.
* ``eval``: {what, value, ...} with chart metadata for kernel values.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import jets, kernels
from .curves import build_curve, curve_from_spec
from .errors import (PointOnTheta, QuadratureNonConvergent,
                     ThetaKernelsError)
from .kernels import (bergman_a_period, bergman_kernel, finiteness_probe,
                      find_theta_zero, gauss_limit_check, klein_coordinates,
                      klein_kernel, prime_form, select_odd_characteristic,
                      szego_kernel, wirtinger_connection)
from .series import QC, Series
from .theta import (Characteristic, RiemannMatrix, second_order_theta_basis,
                    theta_value)

DEFAULTS = {
    "theta_tol": 1e-12,      # certified truncation error of theta sums
    "quadrature_tol": 1e-11, # period/path quadrature doubling tolerance
    "collision_tol": 1e-6,   # relative Klein-coordinate collision radius
    "order": 16,             # series truncation order for jet checks
    "samples": 200,          # finiteness-probe sample count
    "seed": 0,
}


@dataclass
class RunConfig:
    curve_path: str
    theta_tol: float
    quadrature_tol: float
    collision_tol: float
    order: int
    samples: int
    seed: int
    out: str
    fmt: str


def cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def cmat(m) -> list:
    return [[cplx(v) for v in row] for row in np.asarray(m)]


def parse_complex_scalar(text: str) -> complex:
    text = text.strip()
    if text.startswith("["):
        re_, im_ = json.loads(text)
        return complex(re_, im_)
    return complex(text.replace(" ", ""))


def parse_complex_vector(text: str):
    text = text.strip()
    if text.startswith("["):
        data = json.loads(text)
        out = []
        for item in data:
            if isinstance(item, (list, tuple)):
                out.append(complex(item[0], item[1]))
            else:
                out.append(complex(item))
        return np.asarray(out, dtype=complex)
    return np.asarray([complex(p.replace(" ", ""))
                       for p in text.split(",")], dtype=complex)


def emit(report: dict, config: RunConfig):
    text = json.dumps(report, sort_keys=True, indent=1)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text + "\n")
    sys.stdout.write(text + "\n")


def load_curve(config: RunConfig):
    if config.curve_path is None:
        raise ValueError("this command requires --curve")
    with open(config.curve_path) as fh:
        spec = json.load(fh)
    return curve_from_spec(spec, quadrature_tol=config.quadrature_tol)


def _config(args) -> RunConfig:
    return RunConfig(
        curve_path=getattr(args, "curve", None),
        theta_tol=getattr(args, "theta_tol", None) or args.tol
        or DEFAULTS["theta_tol"],
        quadrature_tol=getattr(args, "quadrature_tol", None)
        or DEFAULTS["quadrature_tol"],
        collision_tol=getattr(args, "collision_tol", None)
        or DEFAULTS["collision_tol"],
        order=getattr(args, "order", None) or DEFAULTS["order"],
        samples=getattr(args, "samples", None) or DEFAULTS["samples"],
        seed=args.seed if getattr(args, "seed", None) is not None
        else DEFAULTS["seed"],
        out=getattr(args, "out", None),
        fmt=getattr(args, "format", None) or "json",
    )


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def cmd_periods(args) -> int:
    config = _config(args)
    curve = load_curve(config)
    om = curve.omega.entries
    report = {
        "genus": curve.genus,
        "branch_points": [cplx(b) for b in curve.branch_points],
        "A": cmat(curve.A),
        "B": cmat(curve.B),
        "Omega": cmat(om),
        "symmetry_residual": curve.symmetry_residual,
        "min_im_eigenvalue": float(np.min(np.linalg.eigvalsh(om.imag))),
    }
    emit(report, config)
    return 0


def cmd_probe(args) -> int:
    config = _config(args)
    if config.samples < 2:
        sys.stderr.write("probe needs --samples >= 2\n")
        return 2
    curve = load_curve(config)
    rep = finiteness_probe(curve, config.samples,
                           collision_tol=config.collision_tol,
                           seed=config.seed, tol=config.theta_tol)
    d = rep.to_dict()
    if config.fmt == "csv" or (config.out and config.out.endswith(".csv")):
        lines = [_probe_csv_header(curve.genus)]
        for p, c in zip(rep.points, rep.coordinates):
            cells = []
            for z in p:
                cells += [repr(z.real), repr(z.imag)]
            for z in c:
                cells += [repr(z.real), repr(z.imag)]
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
        if config.out:
            with open(config.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    emit(d, config)
    return 0


def _probe_csv_header(g: int) -> str:
    cols = []
    for i in range(g):
        cols += [f"e_re_{i}", f"e_im_{i}"]
    for i in range(g):
        for j in range(i, g):
            cols += [f"c_re_{i}{j}", f"c_im_{i}{j}"]
    return ",".join(cols)


def cmd_eval(args) -> int:
    config = _config(args)
    what = args.what
    if what == "theta":
        if args.omega:
            om = RiemannMatrix(np.array(json.loads(args.omega), dtype=float) * 1j
                               if _is_real_matrix(args.omega)
                               else _parse_cmatrix(args.omega))
        else:
            om = load_curve(config).omega
        z = parse_complex_vector(args.z)
        val = theta_value(z, om, tol=config.theta_tol)
        emit({"what": "theta", "z": [cplx(v) for v in z],
              "value": cplx(val.value),
              "mantissa": cplx(val.mantissa), "exponent": val.exponent},
             config)
        return 0
    curve = load_curve(config)
    if what == "wirtinger":
        e = parse_complex_vector(args.e)
        p = curve.point(parse_complex_scalar(args.x1), args.sheet1)
        val = wirtinger_connection(curve, e, p, order=max(8, 6),
                                   tol=config.theta_tol)
        emit({"what": "wirtinger", "e": [cplx(v) for v in e],
              "x": cplx(p.x), "sheet": p.sheet, "value": cplx(val)}, config)
        return 0
    x = curve.point(parse_complex_scalar(args.x1), args.sheet1)
    y = curve.point(parse_complex_scalar(args.x2), args.sheet2)
    if what == "bergman":
        kv = bergman_kernel(curve, x, y, tol=config.theta_tol)
    elif what == "szego":
        kv = szego_kernel(curve, parse_complex_vector(args.e), x, y,
                          tol=config.theta_tol)
    elif what == "klein":
        e = parse_complex_vector(args.e)
        kv = klein_kernel(curve, [e, -e], x, y, tol=config.theta_tol)
    else:
        sys.stderr.write(f"unknown evaluator {what!r}\n")
        return 2
    emit({"what": what, "value": cplx(kv.value), "weight": list(kv.weight),
          "chart_x": [cplx(kv.chart_x[0]), kv.chart_x[1], kv.chart_x[2]],
          "chart_y": [cplx(kv.chart_y[0]), kv.chart_y[1], kv.chart_y[2]]},
         config)
    return 0


def _is_real_matrix(text: str) -> bool:
    data = json.loads(text)
    return all(not isinstance(v, (list, tuple)) for row in data for v in row)


def _parse_cmatrix(text: str):
    data = json.loads(text)
    return np.array([[complex(v[0], v[1]) if isinstance(v, (list, tuple))
                      else complex(v) for v in row] for row in data])


# ----------------------------------------------------------------------
# Verification suites
# ----------------------------------------------------------------------

def _check(name, residual, tolerance):
    return {"name": name, "residual": float(residual),
            "tolerance": float(tolerance),
            "pass": bool(residual <= tolerance)}


def _suite_theta(config: RunConfig):
    rng = np.random.default_rng(config.seed)
    checks = []
    val = theta_value([0.0], RiemannMatrix([[1j]]), tol=config.theta_tol)
    import math as _math
    from scipy.special import gamma as _gamma
    checks.append(_check("lemniscatic_value",
                         abs(val.value - _math.pi ** 0.25 / _gamma(0.75)),
                         1e-12))
    for g in (1, 2, 3):
        a = rng.standard_normal((g, g))
        om = RiemannMatrix(1j * (0.25 * (a @ a.T) + np.eye(g)))
        worst_q = 0.0
        worst_p = 0.0
        for _ in range(5):
            z = rng.standard_normal(g) + 1j * rng.uniform(-0.3, 0.3, g)
            m = np.ones(g)
            lhs = theta_value(z + om.entries @ m + m, om, tol=config.theta_tol)
            fac = np.exp(-1j * np.pi * m @ om.entries @ m - 2j * np.pi * m @ z)
            rhs = theta_value(z, om, tol=config.theta_tol)
            worst_q = max(worst_q, abs(lhs.ratio(rhs) - fac) / abs(fac))
            for char in Characteristic.all(g):
                plus = theta_value(z, om, char=char, tol=config.theta_tol)
                minus = theta_value(-z, om, char=char, tol=config.theta_tol)
                sign = -1.0 if char.parity else 1.0
                worst_p = max(worst_p, abs(minus.ratio(plus) - sign))
            if g > 2:
                break
        checks.append(_check(f"quasi_periodicity_g{g}", worst_q, 1e-10))
        checks.append(_check(f"parity_g{g}", worst_p, 1e-10))
    # Riemann quadratic identity, g = 2
    a = rng.standard_normal((2, 2))
    om = RiemannMatrix(1j * (0.25 * a @ a.T + np.eye(2)))
    ratios = []
    for _ in range(10):
        z = rng.standard_normal(2) + 1j * rng.uniform(-0.3, 0.3, 2)
        w = rng.standard_normal(2) + 1j * rng.uniform(-0.3, 0.3, 2)
        lhs = theta_value(z + w, om).value * theta_value(z - w, om).value
        tz = second_order_theta_basis(z, om)
        tw = second_order_theta_basis(w, om)
        rhs = sum(a_.value * b_.value for a_, b_ in zip(tz, tw))
        ratios.append(lhs / rhs)
    ratios = np.array(ratios)
    checks.append(_check("riemann_quadratic_identity",
                         np.max(np.abs(ratios - ratios.mean()))
                         / abs(ratios.mean()), 1e-8))
    return checks


def _suite_kernels(config: RunConfig, curve):
    checks = []
    delta = select_odd_characteristic(curve, config.theta_tol)
    x = curve.point(2.2 + 0.3j, 1)
    y = curve.point(-1.9 + 0.4j, -1)
    e1 = prime_form(curve, delta, x, y).value
    e2 = prime_form(curve, delta, y, x).value
    checks.append(_check("prime_form_antisymmetry",
                         abs(e1 + e2) / abs(e1), 1e-9))
    p = curve.point(2.0, 1)
    vals = []
    for sep in (2e-3, 1e-3):
        q = curve.point(2.0 + sep, 1)
        vals.append(prime_form(curve, delta, p, q).value / (p.x - q.x))
    checks.append(_check("prime_form_diagonal",
                         abs(2 * vals[1] - vals[0] - 1.0), 1e-6))
    vals = []
    for sep in (2e-3, 1e-3):
        q = curve.point(2.0 + sep, 1)
        vals.append(bergman_kernel(curve, p, q, delta=delta).value
                    * (p.x - q.x) ** 2)
    checks.append(_check("bergman_biresidue",
                         abs((4 * vals[1] - vals[0]) / 3 - 1.0), 1e-6))
    wb1 = bergman_kernel(curve, x, y, delta=delta).value
    wb2 = bergman_kernel(curve, y, x, delta=delta).value
    checks.append(_check("bergman_symmetry", abs(wb1 - wb2) / abs(wb1), 1e-9))
    worst = 0.0
    for k in range(curve.genus):
        worst = max(worst, abs(bergman_a_period(curve, x, k, 256,
                                                delta=delta)))
    checks.append(_check("bergman_a_periods", worst, 1e-7))
    e = np.full(curve.genus, 0.3) + 1j * np.linspace(0.1, 0.2, curve.genus)
    vals = []
    for sep in (2e-3, 1e-3):
        q = curve.point(2.0 + sep, 1)
        vals.append(szego_kernel(curve, e, p, q, delta=delta).value
                    * (p.x - q.x))
    checks.append(_check("szego_residue", abs(2 * vals[1] - vals[0] - 1.0),
                         1e-6))
    return checks


def _suite_fay(config: RunConfig, curve):
    rng = np.random.default_rng(config.seed)
    delta = select_odd_characteristic(curve, config.theta_tol)
    g = curve.genus
    worst = 0.0
    count = 0
    while count < 20:
        a = rng.uniform(-0.4, 0.4, g)
        b = rng.uniform(-0.4, 0.4, g)
        e = a + curve.omega.entries @ b
        if kernels.is_on_theta(e, curve.omega):
            continue
        x = curve.point(rng.uniform(1.6, 2.6) + 1j * rng.uniform(-0.6, 0.6),
                        rng.choice([-1, 1]))
        y = curve.point(rng.uniform(-2.6, -1.6) + 1j * rng.uniform(-0.6, 0.6),
                        rng.choice([-1, 1]))
        kl = klein_kernel(curve, [e, -e], x, y, delta=delta,
                          tol=config.theta_tol).value
        wb = bergman_kernel(curve, x, y, delta=delta,
                            tol=config.theta_tol).value
        cc = klein_coordinates(curve, e, tol=config.theta_tol).matrix
        rhs = wb + complex(curve.eval_differentials(x) @ cc
                           @ curve.eval_differentials(y))
        worst = max(worst, abs(kl - rhs) / abs(kl))
        count += 1
    return [_check("fay_corollary_identity", worst, 1e-8)]


def _suite_gauss(config: RunConfig, curve):
    om = curve.omega
    g = curve.genus
    if g == 1:
        tau = om.entries[0, 0]
        e0 = np.array([(1 + tau) / 2])
        direction = np.array([0.37 + 0.05j])
    else:
        rng = np.random.default_rng(config.seed)
        start = rng.standard_normal(g) * 0.3 + 1j * rng.standard_normal(g) * 0.2
        e0 = find_theta_zero(om, start, rng.standard_normal(g)
                             + 0.3j * rng.standard_normal(g))
        direction = rng.standard_normal(g) + 1j * rng.standard_normal(g)
    rep = gauss_limit_check(om, e0, direction, steps=8)
    checks = [_check("gauss_square_limit", rep.max_relative_deviation, 1e-5)]
    if g > 1:
        checks.append(_check("gauss_rank_one", rep.singular_value_ratio, 1e-4))
    return checks


def _suite_jets(config: RunConfig):
    n = config.order
    checks = []

    def poly(coeffs):
        return Series.from_coeffs([QC.of(c) for c in coeffs], n)

    def exact(name, ok):
        checks.append({"name": name, "residual": 0.0 if ok else 1.0,
                       "tolerance": 0.0, "pass": bool(ok)})

    mu2 = jets.mu_nu(2, 2, n)
    L = jets.kernel_to_operator(mu2)
    f = poly([0, 0, 1])
    exact("de_rham_anchor", L.apply(f) == poly([0, 2]))
    for nu in range(1, 5):
        exact(f"mu_tensor_power_{nu}",
              jets.tensor_power(jets.mu_nu(1, 4, n), nu) == jets.mu_nu(nu, 4, n))
        sw = jets.mu_nu(nu, 4, n).swap()
        exact(f"mu_sigma_parity_{nu}",
              sw == jets.mu_nu(nu, 4, n).scale(QC((-1) ** (nu % 2))))
    rng = np.random.default_rng(config.seed)

    def rpoly(deg):
        return poly([complex(rng.integers(-4, 5), rng.integers(-4, 5))
                     for _ in range(deg + 1)])

    w = Series.zero(n)
    w.c[1] = QC(2)
    w.c[2] = QC(1, 1)
    exact("mu_coordinate_invariance",
          jets.change_coordinate(jets.mu_nu(3, 2, n), w) == jets.mu_nu(3, 2, n))
    s = jets.JetKernel(1, 3, 3, [[[poly([1])]], [[rpoly(2)]], [[rpoly(2)]]])
    exact("kernel_operator_round_trip",
          jets.operator_to_kernel(jets.kernel_to_operator(s)) == s)
    q = rpoly(2)
    rho = jets.projective_jet(q, 1, nu=1, m=3)
    exact("rescaling_torsor_k3",
          jets.rescale_shift(jets.tensor_power(rho, 3).restrict(3), 3)
          == q.truncate(8))
    L3 = jets.DiffOperator(order=3, rank=1, q=[[[rpoly(2)]] for _ in range(3)])
    f3 = L3.solve([1, QC(0, 1), -2], 12)
    conn = jets.companion_connection(L3)
    v = conn.solve([-2, QC(0, 1), 1], 10)
    exact("companion_solution_correspondence", v[2] == f3.truncate(10))
    gamma = [[rpoly(2) for _ in range(2)] for _ in range(2)]
    kappa = jets.flat_extension(jets.ConnectionJet(2, gamma), 4)
    det = jets.det_kernel(kappa)
    trace_conn = jets.connection_from_kernel(det)
    exact("det_of_connection_is_trace",
          trace_conn.gamma[0][0] == gamma[0][0] + gamma[1][1])
    a = jets.JetKernel(1, 1, 1, [[[poly([1])]], [[rpoly(2)]], [[rpoly(2)]]])
    b = jets.JetKernel(1, 1, 1, [[[poly([1])]], [[rpoly(2)]], [[rpoly(2)]]])
    block = jets.JetKernel(2, 1, 1,
                           [[[a.scalar_coeff(j), Series.zero(n)],
                             [Series.zero(n), b.scalar_coeff(j)]]
                            for j in range(3)])
    exact("det_multiplicativity", jets.det_kernel(block) == a * b)
    oper = jets.build_oper(rpoly(2), {3: rpoly(2)}, 3, 5)
    conn2 = jets.ConnectionJet(2, [[rpoly(1) for _ in range(2)]
                                   for _ in range(2)])
    mop = jets.matrix_oper(conn2, oper, {})
    exact("trace_projects_matrix_oper",
          jets.trace_map(mop, "trace") == oper)
    kp = jets.flat_extension(conn2, 4)
    lhs = jets.det_kernel(mop * kp.swap())
    tconn = jets.ConnectionJet(1, [[conn2.gamma[0][0] + conn2.gamma[1][1]]])
    rhs = jets.det_kernel(mop) * jets.flat_extension(tconn, 4).swap()
    exact("determinant_frame_diagram", lhs == rhs)
    q2 = rpoly(2)
    rho2 = jets.projective_jet(q2, 2, nu=2, m=3)
    s2 = jets.flat_extension(conn2, 3) * rho2
    got = jets.quadratic_S(s2, 1)
    exact("quadratic_projection_anchor",
          got.truncate(min(got.n, 8)) == q2.truncate(min(got.n, 8)))
    aa, bb, cc = poly([0, 1]), poly([0, 0, -1]), poly([1])
    nil = [[aa, bb], [cc, aa * QC(-1)]]
    zero_m = [[Series.zero(n), Series.zero(n)],
              [Series.zero(n), Series.zero(n)]]
    higgs = jets.JetKernel(2, 2, 2, [zero_m, nil, zero_m])
    exact("nilpotent_higgs_vanishes", jets.quadratic_S(higgs, 0).is_zero())
    diag = [[poly([2, 1]), Series.zero(n)],
            [Series.zero(n), poly([2, 1]) * QC(-1)]]
    higgs2 = jets.JetKernel(2, 2, 2, [zero_m, diag, zero_m])
    out = jets.quadratic_S(higgs2, 0)
    expect = poly([2, 1]) * poly([2, 1]) * QC(2)
    exact("quadratic_hitchin_reduction",
          out.truncate(min(out.n, 10)) == expect.truncate(min(out.n, 10)))
    return checks


def cmd_verify(args) -> int:
    config = _config(args)
    suite = args.suite
    if suite not in ("theta", "kernels", "fay", "jets", "gauss"):
        sys.stderr.write(f"unknown suite {suite!r}\n")
        return 2
    if suite == "theta":
        checks = _suite_theta(config)
    elif suite == "jets":
        checks = _suite_jets(config)
    else:
        curve = load_curve(config) if config.curve_path \
            else build_curve([0, -1, 0, 1],
                             quadrature_tol=config.quadrature_tol)
        if suite == "kernels":
            checks = _suite_kernels(config, curve)
        elif suite == "fay":
            checks = _suite_fay(config, curve)
        else:
            checks = _suite_gauss(config, curve)
    report = {"suite": suite, "checks": checks,
              "pass": all(c["pass"] for c in checks)}
    emit(report, config)
    return 0 if report["pass"] else 1


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thetakernels",
        description="Kernel functions and jet calculus on hyperelliptic curves")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--curve", help="path to a curve spec JSON file")
        p.add_argument("--tol", type=float, help="theta truncation tolerance")
        p.add_argument("--theta-tol", dest="theta_tol", type=float)
        p.add_argument("--quadrature-tol", dest="quadrature_tol", type=float)
        p.add_argument("--collision-tol", dest="collision_tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--order", type=int)
        p.add_argument("--out", help="also write the report to this path")
        p.add_argument("--format", choices=["json", "csv"])

    p = sub.add_parser("periods", help="period matrices of a curve")
    common(p)
    p.set_defaults(func=cmd_periods)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help="theta | kernels | fay | jets | gauss")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", help="finiteness probe of the Klein map")
    common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("eval", help="evaluate a kernel or theta value")
    p.add_argument("what", help="theta | szego | klein | wirtinger | bergman")
    common(p)
    p.add_argument("--omega", help="period matrix as JSON (theta only)")
    p.add_argument("--z", help="theta argument, complex vector")
    p.add_argument("--e", help="Jacobian point, complex vector")
    p.add_argument("--x1", help="first point x-coordinate")
    p.add_argument("--x2", help="second point x-coordinate")
    p.add_argument("--sheet1", type=int, default=1)
    p.add_argument("--sheet2", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PointOnTheta as exc:
        sys.stderr.write(f"point on theta divisor: {exc}\n")
        return 4
    except QuadratureNonConvergent as exc:
        sys.stderr.write(f"quadrature failure: {exc}\n")
        return 3
    except (ThetaKernelsError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
