"""Command-line entry point: one subcommand per experiment.

Outputs are UTF-8 CSV (with ``#``-prefixed config-echo headers) or JSON
reports.  Identical config and seed give byte-identical CSV bodies; the echo
header records every resolved parameter including sign conventions.  Random
instances use the Philox4x64 counter-based generator keyed by --seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, ckg, numkit as nk
from .bch import (
    bch_first_order_audit,
    q_sequence,
    reduced_gibbs_first_order_audit,
    required_digits,
)
from .bp import bp_truncation_error, local_indistinguishability, site_update
from .cluster import (
    coeff_closed,
    coeff_combinatorial,
    compositions,
    derivative_identity_audit,
    multisets,
)
from .gibbs import cmi_bits, correlation, gibbs_state, log_linear_fit, make_partition
from .lattice import (
    PAULI_Z,
    assemble_dense,
    build_xyz_chain,
    from_json_dict,
    subset_hamiltonian,
    to_json_dict,
)
from .rand import philox, random_hermitian
from .recovery import full_recovery_audit, purification_counterexample

DEFAULT_DIGITS_ENV = "THERMOCHAIN_DIGITS"


def _precision(args) -> nk.Precision:
    digits = getattr(args, "digits", None)
    if digits is None:
        env = os.environ.get(DEFAULT_DIGITS_ENV)
        digits = int(env) if env else None
    return nk.DOUBLE if digits in (None, 0) else nk.bigfloat(digits)


def _model(args):
    if args.model == "xyz":
        return build_xyz_chain(args.n)
    with open(args.model, "r", encoding="utf-8") as fh:
        return from_json_dict(json.load(fh))


def _echo_lines(args, extra: dict | None = None) -> list[str]:
    items = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    items["version"] = __version__
    if extra:
        items.update(extra)
    return [f"# {k} = {items[k]}" for k in sorted(items)]


def _write_csv(path, header_lines, columns, rows):
    out = open(path, "w", encoding="utf-8") if path != "-" else sys.stdout
    try:
        for line in header_lines:
            print(line, file=out)
        print(",".join(columns), file=out)
        for row in rows:
            print(",".join(str(v) for v in row), file=out)
    finally:
        if out is not sys.stdout:
            out.close()


def _write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=str)
    if path == "-":
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def cmd_model(args):
    H = _model(args)
    _write_json(args.out, to_json_dict(H))
    return 0


def cmd_gibbs(args):
    H = _model(args)
    prec = _precision(args)
    st = gibbs_state(H, args.beta, prec)
    rows = [(i, f"{float(st.rho[i, i].real):.17g}") for i in range(min(st.rho.shape[0], 64))]
    hdr = _echo_lines(args, {"sign_convention": "+beta H", "logZ": st.logZ})
    _write_csv(args.out, hdr, ["index", "rho_diag"], rows)
    return 0


def cmd_cmi_scan(args):
    H = _model(args)
    st = gibbs_state(H, args.beta)
    n = H.lattice.n
    rows = []
    for R in range(2, n - 1):
        A = (1,)
        C = tuple(range(1 + R + 1, n + 1))
        if not C:
            continue
        B = tuple(range(2, 1 + R + 1))
        val, raw = cmi_bits(st.rho, A, B, C, n)
        rows.append((R, len(A), len(B), len(C), f"{val:.17g}"))
    hdr = _echo_lines(args, {"sign_convention": "+beta H"})
    _write_csv(args.out, hdr, ["R", "A_size", "B_size", "C_size", "cmi_bits"], rows)
    return 0


def cmd_corr_scan(args):
    H = _model(args)
    st = gibbs_state(H, args.beta)
    n = H.lattice.n
    Z1 = nk.embed_on_sites(PAULI_Z, (1,), n)
    rows = []
    for j in range(2, n + 1):
        Zj = nk.embed_on_sites(PAULI_Z, (j,), n)
        c = correlation(st.rho, Z1, Zj, (1,), (j,))
        rows.append((j - 1, f"{c.real:.17g}", f"{c.imag:.17g}", f"{abs(c):.17g}"))
    hdr = _echo_lines(args, {"observables": "Z1,Zj", "sign_convention": "+beta H"})
    _write_csv(args.out, hdr, ["distance", "re", "im", "abs"], rows)
    return 0


def cmd_bp_error(args):
    H = _model(args)
    n = H.lattice.n
    HL, HLp, i0 = site_update(H, tuple(range(1, n)), tuple(range(1, n + 1)))
    Hd, Hpd = assemble_dense(HL), assemble_dense(HLp)
    rows = []
    for ell in range(1, args.ell_max + 1):
        rep = bp_truncation_error(Hd, Hpd, args.beta, i0, ell, n)
        rows.append((ell, f"{rep['raw']:.17g}", f"{rep['renormalized']:.17g}"))
    hdr = _echo_lines(args, {"update_site": i0, "sign_convention": "+beta H"})
    _write_csv(args.out, hdr, ["ell", "raw_error", "renormalized_error"], rows)
    return 0


def cmd_indist(args):
    H = _model(args)
    n = H.lattice.n
    HL, HLp, i0 = site_update(H, tuple(range(1, n)), tuple(range(1, n + 1)))
    Hd, Hpd = assemble_dense(HL), assemble_dense(HLp)
    rows = []
    for ell in range(0, args.ell_max + 1):
        td = local_indistinguishability(Hd, Hpd, args.beta, i0, ell, n)
        rows.append((ell, f"{td:.17g}"))
    hdr = _echo_lines(args, {"update_site": i0, "sign_convention": "+beta H"})
    _write_csv(args.out, hdr, ["ell", "trace_distance"], rows)
    return 0


def cmd_ckg_check(args):
    H = _model(args)
    gen = ckg.build_ckg(H, args.beta)
    st = gibbs_state(H, args.beta)
    res = ckg.stationarity_residuals(gen, st.rho)
    rng = philox(args.seed)
    norms = [{"site": b.site, "a": b.a_index,
              "sampled_1to1_lower": ckg.sampled_one_norm(b, rng, samples=20)}
             for b in gen.blocks]
    worstB = max(float(nk.op_norm(b.coherent)) / 2.0 for b in gen.blocks)
    rep = {
        "config": gen.config_echo(),
        "stationarity": res,
        "worst_stationarity": max(r["residual_trace_norm"] for r in res),
        "one_norms": norms,
        "worst_sampled_1to1": max(x["sampled_1to1_lower"] for x in norms),
        "coherent_norm_printed_worst": worstB,
        "coherent_norm_bound": ckg.coherent_norm_bound(),
    }
    _write_json(args.out, rep)
    return 0 if rep["worst_stationarity"] <= args.tol else 1


def cmd_gap(args):
    H = _model(args)
    gen = ckg.build_ckg(H, args.beta)
    st = gibbs_state(H, args.beta)
    S = gen.superop()
    g = ckg.spectral_gap(S, rho_steady=st.rho)
    rep = {"config": gen.config_echo(), "gap": g, "exceeds_quarter": bool(g > 0.25)}
    if H.lattice.n <= 3:
        rep["gap_dense_oracle"] = ckg.spectral_gap(S, method="dense")
    _write_json(args.out, rep)
    return 0


def cmd_mix(args):
    H = _model(args)
    n = H.lattice.n
    gen = ckg.build_ckg(H, args.beta)
    st = gibbs_state(H, args.beta)
    bond_label = f"bond_{n-1}_{n}"
    Hp = H.with_coefficients({bond_label: 0.0})
    stp = gibbs_state(Hp, args.beta)
    curve = ckg.mixing_curve(gen, stp.rho, st.rho, [float(x) for x in args.times.split(",")])
    g0 = 1.0
    rows = [(c["t"], f"{c['trace_distance']:.17g}",
             f"{4.0 * math.exp(3.0 * args.beta * g0 - c['t'] / 4.0):.17g}") for c in curve]
    hdr = _echo_lines(args, {"perturbation": f"remove {bond_label}", "g0": g0})
    _write_csv(args.out, hdr, ["t", "trace_distance", "bound_4exp"], rows)
    return 0


def cmd_bp_channel(args):
    H = _model(args)
    n = H.lattice.n
    HL = subset_hamiltonian(H, tuple(range(1, n)))
    gen = ckg.build_ckg(H, args.beta)
    cache = {}
    rows = []
    for r in range(1, args.r_max + 1):
        res = ckg.bp_channel_lindblad(HL, H, args.beta, r, args.t, M=args.layers,
                                      gen=gen, cache=cache)
        rows.append((r, f"{res.epsilon:.17g}"))
    hdr = _echo_lines(args, {"sign_convention": "+beta H"})
    _write_csv(args.out, hdr, ["r", "epsilon"], rows)
    return 0


def cmd_recover(args):
    H = _model(args)
    A = tuple(int(s) for s in args.A.split(","))
    C = tuple(int(s) for s in args.C.split(","))
    order = tuple(int(s) for s in args.order.split(",")) if args.order else None
    rep = full_recovery_audit(H, A, C, args.beta, args.r, args.t, args.layers, order)
    rep["config_echo"] = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    rep["sign_convention"] = "+beta H"
    _write_json(args.out, rep)
    return 0


def cmd_cluster_table(args):
    rows = []
    for parts in multisets(args.m):
        cc = coeff_closed(parts)
        cb = coeff_combinatorial(parts)
        if cc != cb:
            print(f"MISMATCH at {parts}: closed {cc} combinatorial {cb}", file=sys.stderr)
            return 1
        rows.append(("+".join(map(str, parts)), f"{cc.numerator}/{cc.denominator}"))
    hdr = _echo_lines(args, {"sign_convention": "-beta H", "normalization": "d_Lc^q factored out"})
    out = open(args.out, "w", encoding="utf-8") if args.out != "-" else sys.stdout
    try:
        for line in hdr:
            print(line, file=out)
        print("parts\tcoefficient", file=out)
        for parts, val in rows:
            print(f"{parts}\t{val}", file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_cluster_audit(args):
    prec = _precision(args)
    rng = philox(args.seed)
    rows = []
    for inst in range(args.instances):
        Hr = random_hermitian(2 ** args.n, rng, norm=1.0)
        Hm = nk.to_precision(Hr, prec) if not prec.is_double else Hr
        res = derivative_identity_audit(Hm, (1,), args.n, args.m_max, prec=prec)
        rows.append([inst] + [f"{v:.6e}" for v in res])
    hdr = _echo_lines(args, {"sign_convention": "-beta H"})
    cols = ["instance"] + [f"residual_m{m}" for m in range(args.m_max + 1)]
    _write_csv(args.out, hdr, cols, rows)
    return 0


def cmd_bch_run(args):
    H = build_xyz_chain(args.n)
    prec = nk.bigfloat(args.digits) if args.digits else nk.DOUBLE
    pts = q_sequence(H, args.beta, args.mmax, prec)
    rows = [(p.m, p.q_str, f"{p.log10q:.12g}") for p in pts]
    hdr = _echo_lines(args, {
        "sign_convention": "+beta H",
        "min_required_digits": required_digits(args.mmax, 2.0 * args.n),
        "emitted": "even m (odd m >= 3 vanish exactly)",
    })
    _write_csv(args.out, hdr, ["m", "Q_num", "log10Q"], rows)
    return 0


def cmd_bch_audit(args):
    H = build_xyz_chain(args.n)
    rep1 = reduced_gibbs_first_order_audit(H, args.beta)
    rng = philox(args.seed)
    A = random_hermitian(8, rng, norm=1.0)
    M = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    Bop = M / np.linalg.norm(M, 2)
    rep2 = bch_first_order_audit(A, Bop, 0.3)
    from fractions import Fraction
    rep3 = bch_first_order_audit(A, Bop, 0.3, b1_convention=Fraction(1, 2))
    rep = {"reduced_gibbs": rep1, "bch": rep2, "bch_negative_control_B1_plus_half": rep3}
    _write_json(args.out, rep)
    ok = rep1["slope"] > 1.9 and rep2["slope"] > 1.9 and rep3["slope"] < 1.5
    return 0 if ok else 1


def cmd_fixtures(args):
    failures = []
    rep = purification_counterexample()
    if abs(rep["pt_rotated_min_eig"] + 0.5) > 1e-12:
        failures.append("bell partial transpose")
    if rep["pt_raw_min_eig"] < -1e-12:
        failures.append("separable partial transpose")
    if rep["cnot_000"] > 0 or rep["cnot_111_to_110"] > 0:
        failures.append("cnot algebra")
    # GHZ CMI = 1 bit
    ghz = np.zeros(8, dtype=complex)
    ghz[0] = ghz[7] = 1.0 / math.sqrt(2.0)
    rho = np.outer(ghz, ghz.conj())
    val, _ = cmi_bits(rho, (1,), (2,), (3,), 3)
    if abs(val - 1.0) > 1e-10:
        failures.append("ghz cmi")
    # assorted basics
    if abs(nk.trace_norm(PAULI_Z) - 2.0) > 1e-12:
        failures.append("pauli trace norm")
    H2 = build_xyz_chain(2)
    if nk.hermiticity_defect(assemble_dense(H2)) > 1e-12:
        failures.append("xyz hermiticity")
    rep_out = {"failures": failures, "counterexample": rep, "ghz_cmi_bits": val}
    _write_json(args.out, rep_out)
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermochain",
                                description="Exact desk-scale spin-chain thermal laboratory")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", default="-")
        sp.add_argument("--seed", type=int, default=1234)
        return sp

    sp = add("model", cmd_model, help="emit a Hamiltonian in the JSON schema")
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=4)

    for name, fn in (("gibbs", cmd_gibbs),):
        sp = add(name, fn)
        sp.add_argument("--model", default="xyz")
        sp.add_argument("--n", type=int, default=4)
        sp.add_argument("--beta", type=float, default=0.5)
        sp.add_argument("--digits", type=int, default=None)

    sp = add("cmi-scan", cmd_cmi_scan)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--beta", type=float, default=0.5)

    sp = add("corr-scan", cmd_corr_scan)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--beta", type=float, default=0.5)

    sp = add("bp-error", cmd_bp_error)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--ell-max", type=int, default=6)

    sp = add("indist", cmd_indist)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--ell-max", type=int, default=5)

    sp = add("ckg-check", cmd_ckg_check)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--beta", type=float, default=0.25)
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = add("gap", cmd_gap)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--beta", type=float, default=0.25)

    sp = add("mix", cmd_mix)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--beta", type=float, default=0.25)
    sp.add_argument("--times", default="1,2,4,8")

    sp = add("bp-channel", cmd_bp_channel)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--beta", type=float, default=0.25)
    sp.add_argument("--t", type=float, default=8.0)
    sp.add_argument("--r-max", type=int, default=4)
    sp.add_argument("--layers", type=int, default=1)

    sp = add("recover", cmd_recover)
    sp.add_argument("--model", default="xyz")
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--beta", type=float, default=0.25)
    sp.add_argument("--A", default="1")
    sp.add_argument("--C", default="6")
    sp.add_argument("--r", type=float, default=2.0)
    sp.add_argument("--t", type=float, default=8.0)
    sp.add_argument("--layers", type=int, default=1)
    sp.add_argument("--order", default="")

    sp = add("cluster-table", cmd_cluster_table)
    sp.add_argument("--m", type=int, default=5)

    sp = add("cluster-audit", cmd_cluster_audit)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--m-max", type=int, default=4)
    sp.add_argument("--instances", type=int, default=3)
    sp.add_argument("--digits", type=int, default=None)

    sp = add("bch-run", cmd_bch_run)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--digits", type=int, default=200)
    sp.add_argument("--mmax", type=int, default=50)

    sp = add("bch-audit", cmd_bch_audit)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--beta", type=float, default=0.5)

    add("fixtures", cmd_fixtures, help="run the counterexample and basic fixtures")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OverflowError, nk.SizeBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
