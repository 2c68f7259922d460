"""Command-line front end.

Usage::

    nvsinglet derive-params [--config run.json] [--set key=value ...] [--out DIR]
    nvsinglet solve ...
    nvsinglet spectrum pl|abs ...
    nvsinglet isc rates|scan|lambda|temperature ...

Every command takes one JSON configuration document (all keys optional, see
:class:`RunConfig`) with ``--set`` overrides on top.  Outputs go to ``--out``
as CSV (or JSON) tables plus ``meta.json``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import isc, params, spectra, vibronic
from .exceptions import FitError, ParameterError, SymmetryError, TruncationError
from .output import RunWriter, canonical_json, config_hash

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat run configuration: model parameters plus numerical settings."""

    # model
    hbar_omega_E: float = params.HBAR_OMEGA_E
    F: float = params.ModelParams.F
    C2: float = params.C2_DEFAULT
    Lambda_e: float = params.ModelParams.Lambda_e
    lambda_z: float = params.LAMBDA_Z
    lambda_perp: float = params.ModelParams.lambda_perp
    Sigma: float = params.ModelParams.Sigma
    N_max: int = params.ModelParams.N_max
    d_perp: float = 1.0
    zpl_singlet: float = params.ZPL_SINGLET
    # inputs of derive-params
    E_JT: float = params.E_JT_XX
    p: float | None = None
    s: float | None = None
    # one-phonon density for the rates
    se_shape: str = "gaussian"
    se_width: float = isc.SE_FWHM
    se_step: float = 0.1
    # spectra
    grid_min: float = -20.0
    grid_max: float = 400.0
    grid_step: float = 0.1
    pl_smearing: list = field(default_factory=lambda: list(spectra.PL_SMEARING))
    polarization: str = "x"
    hr_R: float = 1.3
    hbar_omega_eff: float = params.HBAR_OMEGA_E
    abs_smearing: float = spectra.ABS_SMEARING
    abs_broad: bool = False
    abs_broad_std: float = 30.0
    # scans
    sigma_min: float = 300.0
    sigma_max: float = 480.0
    sigma_step: float = 0.5
    experimental_rates: list = field(default_factory=lambda: [2.70, 2.16])
    lambda_ratio_min: float = 0.5
    lambda_ratio_max: float = 4.0
    lambda_ratio_step: float = 0.05
    T_min: float = 10.0
    T_max: float = 300.0
    T_step: float = 10.0
    n_levels: int | None = None
    # output
    out: str = "out"
    format: str = "csv"

    def model_params(self):
        names = {f.name for f in dataclasses.fields(params.ModelParams)}
        return params.ModelParams(**{k: v for k, v in self.to_dict().items() if k in names})

    def to_dict(self):
        return dataclasses.asdict(self)

    def resolved(self):
        """Configuration as embedded in outputs; the output directory is left out."""
        d = self.to_dict()
        del d["out"]
        return d

    def one_phonon(self):
        if self.se_shape == "gaussian":
            return spectra.gaussian_density(self.hbar_omega_E, self.se_width, step=self.se_step)
        return spectra.gamma_density(self.hbar_omega_E, self.se_width, step=self.se_step)

    def grid(self):
        return spectra.energy_grid(self.grid_min, self.grid_max, self.grid_step)


_FLOAT_OPTIONAL = {"p", "s"}
_INT_OPTIONAL = {"n_levels"}
_CHOICES = {"se_shape": ("gaussian", "gamma"), "polarization": ("x", "y"), "format": ("csv", "json")}
_POSITIVE = {
    "se_width", "se_step", "grid_step", "abs_smearing", "abs_broad_std", "sigma_step",
    "lambda_ratio_step", "T_step", "hbar_omega_eff",
}
_NON_NEGATIVE = {"E_JT", "hr_R", "sigma_min", "lambda_ratio_min", "T_min"}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(raw: dict) -> RunConfig:
    """Build a :class:`RunConfig` from ``raw``, rejecting unknown keys and bad values."""
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    cfg = RunConfig()
    for key, value in raw.items():
        default = getattr(cfg, key)
        if key in _FLOAT_OPTIONAL or key in _INT_OPTIONAL:
            ok = value is None or _is_number(value)
        elif isinstance(default, bool):
            ok = isinstance(value, bool)
        elif isinstance(default, int):
            ok = _is_number(value) and float(value).is_integer()
            value = int(value) if ok else value
        elif isinstance(default, float):
            ok = _is_number(value)
            value = float(value) if ok else value
        elif isinstance(default, list):
            ok = isinstance(value, list) and len(value) > 0 and all(_is_number(x) for x in value)
        else:
            ok = isinstance(value, str)
        if not ok:
            raise ConfigError(f"{key}: invalid value {value!r}")
        setattr(cfg, key, value)

    for key, options in _CHOICES.items():
        if getattr(cfg, key) not in options:
            raise ConfigError(f"{key} must be one of {options}, got {getattr(cfg, key)!r}")
    for key, v in cfg.to_dict().items():
        if _is_number(v) and not math.isfinite(v):
            raise ConfigError(f"{key} must be finite")
    for key in _POSITIVE:
        if getattr(cfg, key) <= 0:
            raise ConfigError(f"{key} must be > 0")
    for key in _NON_NEGATIVE:
        if getattr(cfg, key) < 0:
            raise ConfigError(f"{key} must be >= 0")
    if any(w <= 0 for w in cfg.pl_smearing):
        raise ConfigError("pl_smearing widths must be > 0")
    if any(r <= 0 for r in cfg.experimental_rates):
        raise ConfigError("experimental_rates must be > 0")
    if cfg.n_levels is not None and (int(cfg.n_levels) != cfg.n_levels or cfg.n_levels < 1):
        raise ConfigError("n_levels must be a positive integer")
    for lo, hi in (("grid_min", "grid_max"), ("sigma_min", "sigma_max"),
                   ("lambda_ratio_min", "lambda_ratio_max"), ("T_min", "T_max")):
        if getattr(cfg, hi) < getattr(cfg, lo):
            raise ConfigError(f"{hi} must be >= {lo}")
    try:
        cfg.model_params()
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def parse_assignment(text):
    """``key=value`` with ``value`` read as JSON, else kept as a string."""
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, value = text.split("=", 1)
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip(), parsed


def load_config(path=None, assignments=(), out=None) -> RunConfig:
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
    for a in assignments:
        k, v = parse_assignment(a)
        raw[k] = v
    if out is not None:
        raw["out"] = out
    return validate(raw)


def _arange(lo, hi, step):
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


# ---------------------------------------------------------------------------
# commands


def derive_report(cfg: RunConfig):
    """Plain-text parameter report (deterministic)."""
    mp = cfg.model_params()
    F_formula = params.derive_coupling_F(cfg.E_JT, cfg.hbar_omega_E, cfg.C2)
    rows = [("E_JT", "input", f"{cfg.E_JT:.3f} meV"),
            ("hbar_omega_E", "input", f"{cfg.hbar_omega_E:.3f} meV")]
    if cfg.p is not None and cfg.s is not None:
        C2 = params.derive_correlation_C2(cfg.s, cfg.p)
        rows.append(("C2", "derived: 1 - 2 p^2 s^2", f"{C2:.6f}"))
        if abs(C2 - cfg.C2) > 1e-12:
            rows.append(("C2 (used)", "input", f"{cfg.C2:.6f}"))
    else:
        rows.append(("C2", "input", f"{cfg.C2:.6f}"))
    rows.append(("F (formula)", "derived: sqrt(2 hw E_JT) / (1 + C2)", f"{F_formula:.3f} meV"))
    rows.append(("F (used)", "input", f"{mp.F:.3f} meV"))
    rows.append(("F_tilde = 2F", "derived", f"{2 * mp.F:.3f} meV"))
    lam = params.fit_electronic_gap(cfg.zpl_singlet, mp)
    rows.append(("Lambda_e", f"fit: ZPL = {cfg.zpl_singlet:.2f} meV, N_max = {mp.N_max}", f"{lam:.2f} meV"))
    eig = vibronic.solve(mp.replace(Lambda_e=lam))
    rows.append(("E_PJT", "derived: hw - E(ground doublet)", f"{vibronic.pjt_relaxation_energy(eig, mp):.2f} meV"))
    rows.append(("S", "derived: R^2 / 2", f"{params.huang_rhys_factor(cfg.hr_R):.4f}"))
    w = [max(len(r[i]) for r in rows) for i in range(2)]
    lines = [f"{'quantity':<{w[0]}}  {'source':<{w[1]}}  value"]
    lines += [f"{a:<{w[0]}}  {b:<{w[1]}}  {c}" for a, b, c in rows]
    return "\n".join(lines) + "\n", lam


def cmd_derive_params(cfg, writer=None):
    report, lam = derive_report(cfg)
    sys.stdout.write(report)
    if writer is not None:
        writer.text("params_report.txt", report)
        writer.extra["Lambda_e_fit"] = lam
    return report


def cmd_solve(cfg, writer):
    mp = cfg.model_params()
    eig = vibronic.solve(mp)
    coeffs = vibronic.extract_coefficients(eig)
    e0 = eig.energies[eig.ground_E_index]
    writer.table(
        "levels",
        ["index", "energy_meV", "relative_meV", "label", "partner", "manifold", "A1_weight"],
        [
            (k, float(eig.energies[k]), float(eig.energies[k] - e0), eig.labels[k], "" if eig.partners[k] is None else int(eig.partners[k]),
             "lower" if eig.lower[k] else "upper", float(eig.a1_weight[k]))
            for k in range(len(eig))
        ],
    )
    try:
        a1 = eig.first_excited_A1_index
    except SymmetryError:
        a1 = None
    if a1 is not None:
        writer.table("coefficients", ["n", "c", "d", "f", "c_prime", "d_prime"],
                     coeffs.table_rows(eig.ground_E_index, a1))
        writer.extra["A1_level_meV"] = float(eig.energies[a1] - e0)
    try:
        writer.extra["zpl_meV"] = vibronic.zpl_energy(eig)
    except SymmetryError:
        pass
    writer.extra["n_states"] = len(eig)
    return eig, coeffs


def cmd_spectrum(cfg, kind, writer):
    if kind == "pl":
        eig = vibronic.solve(cfg.model_params())
        spec = spectra.pl_spectrum(eig, tuple(cfg.pl_smearing), cfg.polarization, cfg.d_perp, cfg.grid())
        lines = spectra.pl_lines(eig, cfg.polarization, cfg.d_perp)
        zpl = lines[0].intensity
        writer.table("pl_lines", ["energy_meV", "relative_intensity", "label"],
                     [(ln.energy, ln.intensity / zpl, ln.label) for ln in lines])
        stem = "spectrum_pl"
    else:
        S = params.huang_rhys_factor(cfg.hr_R)
        one = spectra.gamma_density(cfg.hbar_omega_eff, cfg.abs_broad_std, step=cfg.grid_step) if cfg.abs_broad else None
        spec = spectra.hr_absorption(S, cfg.hbar_omega_eff, cfg.abs_smearing, cfg.grid(), one_phonon=one)
        writer.table("hr_weights", ["n", "weight"], enumerate(map(float, spectra.hr_weights(S))))
        stem = "spectrum_abs"
    writer.table(stem, ["energy_meV", "intensity"], zip(map(float, spec.energy), map(float, spec.intensity)))
    writer.extra["maxima_meV"] = [round(float(x), 6) for x in spec.local_maxima(1.0)]
    return spec


_RATE_HEADER = ["Gamma_z_MHz", "Gamma_pm_MHz", "Gamma_mp_MHz", "lifetime_ns"]


def cmd_isc(cfg, mode, writer):
    mp = cfg.model_params()
    eig = vibronic.solve(mp)
    coeffs = vibronic.extract_coefficients(eig)
    S_E = cfg.one_phonon()
    if mode == "rates":
        r = isc.isc_rates(mp.Sigma, mp, coeffs, S_E)
        writer.table("rates", ["Sigma_meV", *_RATE_HEADER], [(mp.Sigma, *r.as_row())])
        writer.extra["ratio_z_perp"] = r.ratio
        return r
    if mode == "scan":
        tab = isc.sigma_scan(_arange(cfg.sigma_min, cfg.sigma_max, cfg.sigma_step), mp, coeffs, S_E)
        writer.table("sigma_scan", ["Sigma_meV", *_RATE_HEADER], tab.rows())
        report = {str(rate): isc.find_crossings(tab.values, tab.total, rate) for rate in cfg.experimental_rates}
        writer.extra["crossings_meV"] = report
        for rate, xs in report.items():
            found = ", ".join(f"{x:.2f}" for x in xs) or "none in range"
            sys.stdout.write(f"total rate {rate} MHz at Sigma = {found} meV\n")
        return tab
    if mode == "lambda":
        ratios = _arange(cfg.lambda_ratio_min, cfg.lambda_ratio_max, cfg.lambda_ratio_step)
        tab = isc.lambda_ratio_scan(ratios, mp.Sigma, mp, coeffs, S_E)
        writer.table("lambda_scan", ["lambda_ratio", *_RATE_HEADER, "Gamma_z_over_perp"],
                     [(*row, float(q)) for row, q in zip(tab.rows(), tab.ratio)])
        return tab
    temps = _arange(cfg.T_min, cfg.T_max, cfg.T_step)
    tab = isc.temperature_scan(temps, mp.Sigma, mp, eig, coeffs, S_E, n_levels=cfg.n_levels)
    writer.table("temperature_scan", ["T_K", *_RATE_HEADER], tab.rows())
    return tab


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key; VALUE is parsed as JSON")
    ap = argparse.ArgumentParser(prog="nvsinglet", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("derive-params", parents=[common], help="derive F, C2 and fit Lambda_e")
    sub.add_parser("solve", parents=[common], help="diagonalize and write levels and coefficients")
    sp = sub.add_parser("spectrum", parents=[common], help="emission or absorption lineshape")
    sp.add_argument("kind", choices=["pl", "abs"])
    ip = sub.add_parser("isc", parents=[common], help="intersystem-crossing rates")
    ip.add_argument("mode", choices=["rates", "scan", "lambda", "temperature"])
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.set, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    name = args.command + "".join(f" {getattr(args, a)}" for a in ("kind", "mode") if hasattr(args, a))
    try:
        writer = RunWriter(cfg.out, name, cfg.resolved(), cfg.format)
        if args.command == "derive-params":
            cmd_derive_params(cfg, writer)
        elif args.command == "solve":
            cmd_solve(cfg, writer)
        elif args.command == "spectrum":
            cmd_spectrum(cfg, args.kind, writer)
        else:
            cmd_isc(cfg, args.mode, writer)
        writer.finish()
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitError, SymmetryError, TruncationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


__all__ = ["RunConfig", "ConfigError", "validate", "load_config", "main", "canonical_json", "config_hash"]

if __name__ == "__main__":
    sys.exit(main())
