"""Command-line interface.

Exit codes: 0 success, 2 invalid input (validation, parse, missing file),
3 the model cannot evaluate the input (divergent or degenerate pair).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cce import PairCluster, cce_coherence, full_oracle
from .ensemble import generate_ensemble, load_modes
from .errors import PhysicsError, ValidationError
from .fitting import fit_stretched_exp
from .model import EnsembleInput, ensemble_from_dict, save_ensemble, system_from_dict
from .pipeline import RunConfig, simulate_ensemble
from .rates import coupling_matrix, ensemble_rates, pair_table, point_dipole_provider
from .report import (
    compare_modes,
    emit_svg,
    format_ordering,
    read_profile,
    write_ensemble_rates,
    write_fit,
    write_profile,
    write_rate_table,
    write_report,
)
from .synth import parse_template, synthesize

log = logging.getLogger("spinlind")

EXIT_OK, EXIT_INPUT, EXIT_PHYSICS = 0, 2, 3


def _load_any(path: str | Path) -> EnsembleInput | object:
    """Spin-system or ensemble file, told apart by the ``equilibrium`` key."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from None
    if isinstance(data, dict) and "equilibrium" in data:
        return ensemble_from_dict(data)
    return system_from_dict(data)


def _load_ensemble(path: str | Path) -> EnsembleInput:
    obj = _load_any(path)
    if not isinstance(obj, EnsembleInput):
        raise ValidationError(f"{path}: expected an ensemble file")
    return obj


def _out(config: RunConfig) -> Path:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    return config.out_dir


def cmd_rates(path: str | Path, config: RunConfig) -> int:
    obj = _load_any(path)
    out = _out(config)
    if isinstance(obj, EnsembleInput):
        rates = ensemble_rates(obj, config.delta_mode, config.norm_a, convention=config.convention, workers=config.workers)
        write_ensemble_rates(rates, out / "rates.csv", out / "sigma.csv")
        for pair, msg in rates.messages.items():
            log.warning("pair %s flagged: %s", pair, msg)
        print(f"{len(rates.labels)} geometries, {len(rates.pairs)} pairs, "
              f"{int(rates.flagged.sum())} flagged -> {out / 'rates.csv'}, {out / 'sigma.csv'}")
    else:
        table = pair_table(obj, config.delta_mode, config.norm_a, convention=config.convention)
        write_rate_table(table, out / "rates.csv")
        print(f"{len(table.pairs)} pairs -> {out / 'rates.csv'}")
    return EXIT_OK


def cmd_simulate(path: str | Path, config: RunConfig, per_cluster: bool = False) -> int:
    ens = _load_ensemble(path)
    out = _out(config)
    result = simulate_ensemble(ens, config)
    write_profile(result.profile, out / "coherence.csv")
    if per_cluster:
        for c, prof in zip(result.clusters, result.cluster_profiles):
            write_profile(prof, out / f"cluster_{c.i}_{c.j}.csv")
    print(f"{result.name} ({result.delta_mode}): {len(result.clusters)} clusters -> {out / 'coherence.csv'}")
    return EXIT_OK


def cmd_fit(path: str | Path, config: RunConfig) -> int:
    profile = read_profile(path)
    result = fit_stretched_exp(profile)
    out = _out(config)
    write_fit(result, out / "fit.csv", profile.label)
    print(f"T2 = {result.T2_ms:.6g} ms  beta = {result.beta:.4f}  rmse = {result.rmse:.3g}  "
          f"converged = {result.converged}")
    return EXIT_OK


def cmd_compare(paths: Sequence[str | Path], config: RunConfig) -> int:
    ensembles = [_load_ensemble(p) for p in paths]
    names = [e.equilibrium.name for e in ensembles]
    if len(set(names)) != len(names):
        raise ValidationError(f"system names must be unique, got {names}")
    out = _out(config)
    fits = {"ab-initio": {}, "zero": {}}
    profiles = []
    for ens in ensembles:
        for mode in ("ab-initio", "zero"):
            res = simulate_ensemble(ens, config, delta_mode=mode)
            fits[mode][res.name] = res.fit()
            write_profile(res.profile, out / f"{res.name}_{mode}_coherence.csv")
            tag = "delta_ij" if mode == "ab-initio" else "delta_0"
            profiles.append(res.profile.relabel(f"{res.name} {tag}"))
    report = compare_modes(fits["ab-initio"], fits["zero"])
    write_report(report, out / "report.csv")
    emit_svg(profiles, out / "profiles.svg", title="Electron coherence")
    print(f"ab-initio ordering (longest first): {format_ordering(report.ordering_ab_initio)}")
    print(f"zero ordering      (longest first): {format_ordering(report.ordering_zero)}")
    return EXIT_OK


def cmd_synth(template: str, out_dir: str | Path) -> list[Path]:
    parse_template(template)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ens in synthesize(template):
        path = out_dir / f"{ens.equilibrium.name}.json"
        save_ensemble(ens, path)
        written.append(path)
    for p in written:
        print(p)
    return written


def cmd_ensemble(system_path, modes_path, out_path, amplitude: str = "zero-point", hyperfine: str = "copy") -> int:
    system = _load_any(system_path)
    if isinstance(system, EnsembleInput):
        system = system.equilibrium
    modes = load_modes(modes_path)
    provider = point_dipole_provider if hyperfine == "point-dipole" else None
    ens = generate_ensemble(system, modes, amplitude, hyperfine_provider=provider)
    save_ensemble(ens, out_path)
    print(f"{len(ens.geometries)} geometries -> {out_path}")
    return EXIT_OK


def _parse_pairs(spec: str | None, n: int) -> list[tuple[int, int]] | None:
    if not spec:
        return None
    pairs = []
    for item in spec.split(","):
        try:
            a, b = (int(x) for x in item.split("-"))
        except ValueError:
            raise ValidationError(f"bad pair {item!r}; use e.g. 0-1,2-3") from None
        if not (0 <= a < n and 0 <= b < n and a != b):
            raise ValidationError(f"pair {item!r} out of range for {n} nuclei")
        pairs.append((min(a, b), max(a, b)))
    return pairs


def oracle_deviation(obj, config: RunConfig, pairs=None, gamma: float = 0.0):
    """Max |full oracle - CCE product| for a system or ensemble of <= 5 nuclei."""
    if isinstance(obj, EnsembleInput):
        system = obj.equilibrium
        rates = ensemble_rates(obj, config.delta_mode, config.norm_a, convention=config.convention)
        gammas = {p: (0.0 if f else float(s)) for p, s, f in zip(rates.pairs, rates.sigma, rates.flagged)}
    else:
        system = obj
        n = system.n_nuclei
        gammas = {(i, j): gamma for i in range(n) for j in range(i + 1, n)}
    n = system.n_nuclei
    Jm = coupling_matrix(system, convention=config.convention)
    couplings = {
        (i, j): (float(Jm[i, j]) if pairs is None or (i, j) in pairs else 0.0)
        for i in range(n)
        for j in range(i + 1, n)
    }
    t = config.grid()
    oracle = full_oracle(system, gammas, t, couplings, config.observable, convention=config.convention)
    A = system.hyperfine_rad_s
    clusters = [
        PairCluster(i, j, float(A[i]), float(A[j]), couplings[(i, j)], gammas[(i, j)])
        for (i, j) in sorted(couplings)
    ]
    product, _ = cce_coherence(clusters, t, config.observable, config.workers)
    return float(np.max(np.abs(oracle.values - product.values))), oracle, product


def cmd_oracle(path: str | Path, config: RunConfig, pairs: str | None = None, gamma: float = 0.0) -> int:
    obj = _load_any(path)
    system = obj.equilibrium if isinstance(obj, EnsembleInput) else obj
    dev, _, _ = oracle_deviation(obj, config, _parse_pairs(pairs, system.n_nuclei), gamma)
    print(f"max |oracle - CCE| = {dev:.3e}")
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta-mode", choices=["ab-initio", "zero"], default="ab-initio")
    p.add_argument("--tmax-ms", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--norm-a", type=float, default=1.0)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--convention", choices=["verbatim", "si"], default="verbatim",
                   help="dipolar prefactor: mu0 or mu0/4pi")
    p.add_argument("--observable", choices=["echo", "fid"], default="echo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinlind", description="Molecular spin T2 trends from flip-flop rate spreads.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="pair rates for a system, or rates + sigma for an ensemble")
    p.add_argument("input")
    _common(p)

    p = sub.add_parser("simulate", help="pair-CCE coherence profile of an ensemble")
    p.add_argument("ensemble")
    p.add_argument("--per-cluster", action="store_true")
    _common(p)

    p = sub.add_parser("fit", help="fit exp(-(t/T2)^beta) to a coherence CSV")
    p.add_argument("profile")
    _common(p)

    p = sub.add_parser("compare", help="fit both delta modes for several ensembles; CSV + SVG report")
    p.add_argument("ensembles", nargs="+")
    _common(p)

    p = sub.add_parser("synth", help="write synthetic ensembles (barrier-demo, ladder:N, random:N)")
    p.add_argument("template")
    p.add_argument("--out", default=".")

    p = sub.add_parser("ensemble", help="displaced-geometry ensemble from a system and normal modes")
    p.add_argument("system")
    p.add_argument("modes")
    p.add_argument("--amplitude", default="zero-point", help="zero-point or fixed:<angstrom>")
    p.add_argument("--hyperfine", choices=["copy", "point-dipole"], default="copy")
    p.add_argument("--out", default="ensemble.json", help="output file")

    p = sub.add_parser("oracle", help="compare the pair-CCE product with the full simulation (<= 5 nuclei)")
    p.add_argument("input")
    p.add_argument("--pairs", help="keep dipolar couplings only for these pairs, e.g. 0-1,2-3")
    p.add_argument("--gamma", type=float, default=0.0, help="channel rate for plain system files (rad/s)")
    _common(p)
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        delta_mode=args.delta_mode,
        t_max_ms=args.tmax_ms,
        n_steps=args.steps,
        norm_a=args.norm_a,
        out_dir=Path(args.out),
        convention=args.convention,
        observable=args.observable,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "rates":
            return cmd_rates(args.input, _config(args))
        if args.command == "simulate":
            return cmd_simulate(args.ensemble, _config(args), args.per_cluster)
        if args.command == "fit":
            return cmd_fit(args.profile, _config(args))
        if args.command == "compare":
            return cmd_compare(args.ensembles, _config(args))
        if args.command == "synth":
            cmd_synth(args.template, args.out)
            return EXIT_OK
        if args.command == "ensemble":
            return cmd_ensemble(args.system, args.modes, args.out, args.amplitude, args.hyperfine)
        if args.command == "oracle":
            return cmd_oracle(args.input, _config(args), args.pairs, args.gamma)
    except PhysicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (ValidationError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
