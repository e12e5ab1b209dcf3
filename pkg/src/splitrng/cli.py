"""Command-line orchestration: stream generation, analysis of stored streams,
angle/bias sweeps, CHSH certification, and a reduced-scale selftest.

File conventions: the payload at OUT holds the packed bits (raw bytes,
MSB-first, or their hex dump), OUT.meta.json is the sidecar with bit length,
digest, and the fully resolved configuration, and OUT.report.json carries the
analysis report. Exit codes: 0 success, 1 validation or statistical-test
failure, 2 I/O or integrity error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .extract import BitStream, Equipartition, SymbolStream, eliminate, identify, pack_bits, unpack_bits, xor_combine
from .protocols import (
    NO_CLICK,
    DetectorModel,
    adaptive_epr_trials,
    chsh_certify,
    epr_trials,
    prepare_basis_state,
    run_blocked,
    single_trials,
)
from .qcore import RandomSource, computational_basis, fourier_basis, spin_dim
from .statkit import DEFAULT_SIGNIFICANCE, bias_estimate, run_suite, stream_digest

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_IO = 2

DEG = math.pi / 180.0

SPIN_TOKENS = {"1/2": 0.5, "0.5": 0.5, "1": 1.0, "1.0": 1.0, "3/2": 1.5, "1.5": 1.5}
SPIN_LABELS = {0.5: "1/2", 1.0: "1", 1.5: "3/2"}

PHYSICAL_ASSUMPTION_NOTE = (
    "all trials are simulated in one process; spacelike separation of the two "
    "measurement stations is a physical assumption of the modeled setup, not "
    "a simulated property"
)


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""


class IntegrityError(RuntimeError):
    """Stored stream and sidecar metadata disagree."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    protocol: str
    dim: int
    spin: float | None
    theta_a_deg: float
    theta_b_deg: float | None
    adapt_deg: dict | None
    prep_basis: str
    prep_index: int
    meas_basis: str
    detector_bias: float
    preferred_outcome: int
    no_click_prob: float
    events: int
    seed: int
    block_size: int
    workers: int
    keep: tuple[int, int] | None
    partition: tuple[tuple[int, ...], tuple[int, ...]] | None
    out: str
    payload_format: str
    significance: float

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "dim": self.dim,
            "spin": None if self.spin is None else SPIN_LABELS[self.spin],
            "theta_a_deg": self.theta_a_deg,
            "theta_b_deg": self.theta_b_deg,
            "adapt_deg": None
            if self.adapt_deg is None
            else {str(k): v for k, v in sorted(self.adapt_deg.items())},
            "prep_basis": self.prep_basis,
            "prep_index": self.prep_index,
            "meas_basis": self.meas_basis,
            "detector_bias": self.detector_bias,
            "preferred_outcome": self.preferred_outcome,
            "no_click_prob": self.no_click_prob,
            "events": self.events,
            "seed": self.seed,
            "block_size": self.block_size,
            "workers": self.workers,
            "keep": None if self.keep is None else list(self.keep),
            "partition": None if self.partition is None else [list(c) for c in self.partition],
            "out": self.out,
            "payload_format": self.payload_format,
            "significance": self.significance,
        }


def _parse_spin(token: str) -> float:
    try:
        return SPIN_TOKENS[token.strip()]
    except KeyError:
        raise ConfigError(f"spin: unknown value {token!r}; use 1/2, 1, or 3/2") from None


def _parse_keep(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError("keep: expected two comma-separated symbols, e.g. 0,1")
    try:
        k0, k1 = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"keep: symbols must be integers, got {text!r}") from None
    return k0, k1


def _parse_partition(text: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    halves = text.split(":")
    if len(halves) != 2:
        raise ConfigError("partition: expected CLASS0:CLASS1, e.g. 0,1:2,3")
    try:
        classes = tuple(tuple(int(s) for s in half.split(",")) for half in halves)
    except ValueError:
        raise ConfigError(f"partition: symbols must be integers, got {text!r}") from None
    return classes


def _parse_adapt(text: str) -> dict[int, float]:
    mapping = {}
    for item in text.split(","):
        pieces = item.split(":")
        if len(pieces) != 2:
            raise ConfigError("adapt: expected OUTCOME:DEGREES pairs, e.g. 0:90,1:90")
        try:
            mapping[int(pieces[0])] = float(pieces[1])
        except ValueError:
            raise ConfigError(f"adapt: malformed entry {item!r}") from None
    return mapping


def _parse_grid(text: str, field: str) -> list[float]:
    """Comma list (0,45,90) or inclusive range START:STOP:STEP."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ConfigError(f"{field}: step must be positive")
            return [float(v) for v in np.arange(start, stop + step / 2, step)]
        return [float(p) for p in text.split(",")]
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"{field}: malformed grid {text!r}") from None


def _parse_angle_pair(text: str, field: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{field}: expected two comma-separated angles in degrees")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{field}: angles must be numbers, got {text!r}") from None


def _check_common(args) -> None:
    if args.events is None or args.events < 1:
        raise ConfigError("events: must be a positive integer")
    if args.seed is None:
        raise ConfigError("seed: a master seed is required; it is never auto-generated")
    if not 0 <= args.seed < 2**64:
        raise ConfigError("seed: must fit in 64 bits")
    if args.block_size < 1:
        raise ConfigError("block-size: must be >= 1")
    if args.workers < 1:
        raise ConfigError("workers: must be >= 1")
    if not 0.0 < args.significance <= 0.5:
        raise ConfigError("significance: must lie in (0, 0.5]")


def resolve_generate_config(args) -> RunConfig:
    _check_common(args)
    protocol = args.protocol
    if not 0.0 <= args.detector_bias <= 1.0:
        raise ConfigError("detector-bias: must lie in [0, 1]")
    if not 0.0 <= args.no_click_prob < 1.0:
        raise ConfigError("no-click-prob: must lie in [0, 1)")

    keep = _parse_keep(args.keep) if args.keep else None
    partition = _parse_partition(args.partition) if args.partition else None
    if keep and partition:
        raise ConfigError("keep/partition: choose at most one downgrading mode")

    spin = None
    adapt = None
    if protocol == "single-conjugate":
        if args.spin is not None:
            raise ConfigError("spin: not valid for the single-conjugate protocol (use dim)")
        dim = args.dim if args.dim is not None else 3
        if dim not in (2, 3, 4):
            raise ConfigError("dim: must be one of 2, 3, 4")
        prep_basis = args.prep_basis or "fourier"
        meas_basis = args.meas_basis or "computational"
        if not 0 <= args.prep_index < dim:
            raise ConfigError(f"prep-index: must lie in [0, {dim})")
        theta_a = args.theta_a if args.theta_a is not None else 0.0
        theta_b = None
    else:
        if args.dim is not None:
            raise ConfigError(f"dim: not valid for the {protocol} protocol (use spin)")
        spin = _parse_spin(args.spin) if args.spin is not None else 0.5
        dim = spin_dim(spin)
        prep_basis, meas_basis = "singlet", "rotation"
        theta_a = args.theta_a if args.theta_a is not None else 0.0
        if protocol == "epr-adaptive":
            if not args.adapt:
                raise ConfigError("adapt: required for the epr-adaptive protocol")
            adapt = _parse_adapt(args.adapt)
            missing = [k for k in range(dim) if k not in adapt]
            if missing:
                raise ConfigError(f"adapt: missing angle for outcome(s) {missing}")
            theta_b = None
        else:
            if args.adapt:
                raise ConfigError("adapt: only valid for the epr-adaptive protocol")
            theta_b = args.theta_b if args.theta_b is not None else 90.0

    if not 0 <= args.preferred_outcome < dim:
        raise ConfigError(f"preferred-outcome: must lie in [0, {dim})")

    for spec_name, pair in (("keep", keep),):
        if pair is not None:
            k0, k1 = pair
            if k0 == k1:
                raise ConfigError(f"{spec_name}: symbols must be distinct")
            if not (0 <= k0 < dim and 0 <= k1 < dim):
                raise ConfigError(f"{spec_name}: symbols must lie in [0, {dim})")
    if partition is not None:
        if dim % 2 != 0:
            raise ConfigError(f"partition: alphabet size {dim} is odd; eliminate instead")
        try:
            Equipartition(frozenset(partition[0]), frozenset(partition[1])).covers(dim) or (
                _ for _ in ()
            ).throw(ValueError("partition does not cover the alphabet"))
            if not Equipartition(frozenset(partition[0]), frozenset(partition[1])).covers(dim):
                raise ValueError("partition does not cover the alphabet")
        except ValueError as exc:
            raise ConfigError(f"partition: {exc}") from None
    if keep is None and partition is None and dim > 2:
        # default downgrading: keep the two extreme outcomes
        keep = (0, dim - 1)

    if args.out is None:
        raise ConfigError("out: an output path is required")

    return RunConfig(
        protocol=protocol,
        dim=dim,
        spin=spin,
        theta_a_deg=float(theta_a),
        theta_b_deg=None if theta_b is None else float(theta_b),
        adapt_deg=adapt,
        prep_basis=prep_basis,
        prep_index=args.prep_index,
        meas_basis=meas_basis,
        detector_bias=float(args.detector_bias),
        preferred_outcome=int(args.preferred_outcome),
        no_click_prob=float(args.no_click_prob),
        events=int(args.events),
        seed=int(args.seed),
        block_size=int(args.block_size),
        workers=int(args.workers),
        keep=keep,
        partition=partition,
        out=str(args.out),
        payload_format=args.format,
        significance=float(args.significance),
    )


# ---------------------------------------------------------------------------
# generation pipeline


def _named_basis(name: str, dim: int):
    if name == "computational":
        return computational_basis(dim)
    if name == "fourier":
        return fourier_basis(dim)
    raise ConfigError(f"basis: unknown basis {name!r}")


def _detector(cfg: RunConfig) -> DetectorModel:
    return DetectorModel(
        stick_prob=cfg.detector_bias,
        preferred_outcome=cfg.preferred_outcome,
        no_click_prob=cfg.no_click_prob,
    )


def _downgrade_single(cfg: RunConfig, symbols: SymbolStream) -> BitStream:
    if cfg.keep is not None:
        return eliminate(symbols, cfg.keep)
    if cfg.partition is not None:
        part = Equipartition(frozenset(cfg.partition[0]), frozenset(cfg.partition[1]))
        return identify(symbols, part)
    return BitStream(symbols.symbols.astype(np.uint8))


def _pair_bits(cfg: RunConfig, a: np.ndarray, b: np.ndarray) -> tuple[BitStream, BitStream]:
    """Map coincident outcome pairs to aligned per-side bit streams.

    Elimination gates jointly (a trial survives only when both sides lie in
    the kept set) so positions stay paired for the XOR; identification is
    per-side and length-preserving.
    """
    if cfg.keep is not None:
        k0, k1 = cfg.keep
        mask = np.isin(a, cfg.keep) & np.isin(b, cfg.keep)
        return (
            BitStream((a[mask] == k1).astype(np.uint8)),
            BitStream((b[mask] == k1).astype(np.uint8)),
        )
    if cfg.partition is not None:
        lut = np.zeros(cfg.dim, dtype=np.uint8)
        lut[list(cfg.partition[1])] = 1
        return BitStream(lut[a]), BitStream(lut[b])
    return BitStream(a.astype(np.uint8)), BitStream(b.astype(np.uint8))


@dataclass(frozen=True)
class GenerationResult:
    bits: BitStream
    derived: dict


def generate_stream(cfg: RunConfig) -> GenerationResult:
    """Run the configured protocol for cfg.events trials and downgrade to bits."""
    master = RandomSource(cfg.seed)
    det = _detector(cfg)
    started = time.perf_counter()

    if cfg.protocol == "single-conjugate":
        prep = prepare_basis_state(_named_basis(cfg.prep_basis, cfg.dim), cfg.prep_index)
        meas = _named_basis(cfg.meas_basis, cfg.dim)

        def block(rng, count):
            return single_trials(prep, meas, det, count, rng)

        reported = np.concatenate(run_blocked(master, cfg.events, cfg.block_size, cfg.workers, block))
        elapsed = time.perf_counter() - started
        clicked = reported != NO_CLICK
        symbols = SymbolStream(cfg.dim, reported[clicked])
        bits = _downgrade_single(cfg, symbols)
        counts = np.bincount(symbols.symbols, minlength=cfg.dim)
        derived = {
            "events": cfg.events,
            "clicked_events": int(clicked.sum()),
            "symbol_counts": [int(c) for c in counts],
            "output_bits": len(bits),
        }
    else:
        theta_a = cfg.theta_a_deg * DEG
        if cfg.protocol == "epr-adaptive":
            adapt_rad = {k: v * DEG for k, v in cfg.adapt_deg.items()}

            def block(rng, count):
                a, b, _ = adaptive_epr_trials(cfg.spin, theta_a, adapt_rad, det, det, count, rng)
                return a, b

        else:
            theta_b = cfg.theta_b_deg * DEG

            def block(rng, count):
                return epr_trials(cfg.spin, theta_a, theta_b, det, det, count, rng)

        chunks = run_blocked(master, cfg.events, cfg.block_size, cfg.workers, block)
        a = np.concatenate([c[0] for c in chunks])
        b = np.concatenate([c[1] for c in chunks])
        elapsed = time.perf_counter() - started
        coincident = (a != NO_CLICK) & (b != NO_CLICK)
        a_bits, b_bits = _pair_bits(cfg, a[coincident], b[coincident])
        bits = xor_combine(a_bits, b_bits)
        derived = {
            "events": cfg.events,
            "coincident_events": int(coincident.sum()),
            "output_bits": len(bits),
            "side_a_bias": bias_estimate(a_bits) if len(a_bits) else None,
            "side_b_bias": bias_estimate(b_bits) if len(b_bits) else None,
        }

    if len(bits):
        p = float(np.count_nonzero(bits.bits)) / len(bits)
        derived["output_bias"] = p - 0.5
        derived["output_bias_se"] = math.sqrt(p * (1.0 - p) / len(bits))
    else:
        derived["output_bias"] = None
        derived["output_bias_se"] = None
    derived["elapsed_seconds"] = elapsed
    derived["trials_per_second"] = cfg.events / elapsed if elapsed > 0 else None
    return GenerationResult(bits, derived)


def _provenance(cfg: RunConfig) -> list[str]:
    notes = []
    if cfg.protocol == "single-conjugate":
        if cfg.dim >= 3:
            notes.append(f"multi-outcome measurement in dimension {cfg.dim}")
        notes.append(
            f"conjugate preparation/measurement mismatch ({cfg.prep_basis} state, "
            f"{cfg.meas_basis} analyzer)"
        )
    elif cfg.protocol == "epr-xor":
        notes.append("entangled-pair generation with XOR debiasing of the two sides")
    elif cfg.protocol == "epr-adaptive":
        notes.append(
            "entangled-pair generation with outcome-adapted analyzer angle, XOR debiased"
        )
    return notes


# ---------------------------------------------------------------------------
# file formats


def _sidecar_path(out: str) -> Path:
    return Path(str(out) + ".meta.json")


def _report_path(out: str) -> Path:
    return Path(str(out) + ".report.json")


def _write_payload(path: Path, payload: bytes, fmt: str) -> None:
    if fmt == "raw":
        path.write_bytes(payload)
    elif fmt == "hex":
        path.write_text(payload.hex() + "\n")
    else:
        raise ConfigError(f"format: unknown payload format {fmt!r}")


def _read_payload(path: Path, fmt: str) -> bytes:
    if fmt == "raw":
        return path.read_bytes()
    if fmt == "hex":
        try:
            return bytes.fromhex(path.read_text().strip())
        except ValueError as exc:
            raise IntegrityError(f"payload is not valid hex: {exc}") from None
    raise IntegrityError(f"sidecar names unknown payload format {fmt!r}")


def write_stream_files(cfg: RunConfig, bits: BitStream, report: dict) -> None:
    payload = pack_bits(bits)
    _write_payload(Path(cfg.out), payload, cfg.payload_format)
    sidecar = {
        "version": __version__,
        "bit_length": len(bits),
        "digest": stream_digest(bits),
        "digest_algorithm": "sha256",
        "payload_format": cfg.payload_format,
        "config": cfg.to_dict(),
    }
    _sidecar_path(cfg.out).write_text(json.dumps(sidecar, indent=2) + "\n")
    _report_path(cfg.out).write_text(json.dumps(report, indent=2) + "\n")


def load_stream(path: str) -> tuple[BitStream, dict]:
    """Load a payload + sidecar pair, verifying digest integrity."""
    sidecar_path = _sidecar_path(path)
    if not sidecar_path.exists():
        raise IntegrityError(f"missing sidecar {sidecar_path}")
    try:
        sidecar = json.loads(sidecar_path.read_text())
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"sidecar is not valid JSON: {exc}") from None
    for key in ("bit_length", "digest", "payload_format"):
        if key not in sidecar:
            raise IntegrityError(f"sidecar is missing required field {key!r}")
    payload = _read_payload(Path(path), sidecar["payload_format"])
    try:
        bits = unpack_bits(payload, int(sidecar["bit_length"]))
    except ValueError as exc:
        raise IntegrityError(f"payload inconsistent with sidecar: {exc}") from None
    digest = stream_digest(bits)
    if digest != sidecar["digest"]:
        raise IntegrityError(
            f"digest mismatch: sidecar records {sidecar['digest']}, payload hashes to {digest}"
        )
    return bits, sidecar


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    cfg = resolve_generate_config(args)
    result = generate_stream(cfg)
    suite = run_suite(result.bits, cfg.significance) if len(result.bits) else None
    report = {
        "version": __version__,
        "command": "generate",
        "config": cfg.to_dict(),
        "provenance": _provenance(cfg),
        "physical_assumptions": PHYSICAL_ASSUMPTION_NOTE,
        "derived": result.derived,
        "suite": None if suite is None else suite.to_dict(),
    }
    write_stream_files(cfg, result.bits, report)
    print(f"generated {len(result.bits)} bits from {cfg.events} events -> {cfg.out}")
    if result.derived["output_bias"] is not None:
        print(
            f"output bias {result.derived['output_bias']:+.6f} "
            f"(se {result.derived['output_bias_se']:.6f})"
        )
    if suite is not None:
        print(f"battery: {'pass' if suite.overall else 'FAIL'} (digest {suite.input_digest[:16]}...)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not 0.0 < args.significance <= 0.5:
        raise ConfigError("significance: must lie in (0, 0.5]")
    bits, sidecar = load_stream(args.path)
    suite = run_suite(bits, args.significance)
    report = {
        "version": __version__,
        "command": "analyze",
        "path": str(args.path),
        "significance": args.significance,
        "bit_length": len(bits),
        "digest": suite.input_digest,
        "embedded_config": sidecar.get("config"),
        "suite": suite.to_dict(),
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK if suite.overall else EXIT_FAIL


def cmd_sweep(args) -> int:
    _check_common(args)
    thetas = _parse_grid(args.theta_grid, "theta-grid")
    biases = _parse_grid(args.bias_grid, "bias-grid")
    if not thetas or not biases:
        raise ConfigError("theta-grid/bias-grid: grids must be nonempty")
    for beta in biases:
        if not 0.0 <= beta <= 1.0:
            raise ConfigError(f"bias-grid: detector bias {beta} outside [0, 1]")
    master = RandomSource(args.seed)
    rows = []
    cell = 0
    for theta_deg in thetas:
        for beta in biases:
            det = DetectorModel(stick_prob=beta, preferred_outcome=1)
            rng = master.substream(cell)
            a, b = epr_trials(0.5, 0.0, theta_deg * DEG, det, det, args.events, rng)
            s = np.bitwise_xor(a.astype(np.uint8), b.astype(np.uint8))
            p = float(np.count_nonzero(s)) / s.size
            rows.append(
                {
                    "theta_b_deg": float(theta_deg),
                    "detector_bias": float(beta),
                    "events": int(args.events),
                    "xor_bias": p - 0.5,
                    "xor_bias_se": math.sqrt(max(p * (1.0 - p), 0.0) / s.size),
                }
            )
            cell += 1
    doc = {
        "version": __version__,
        "command": "sweep",
        "config": {
            "theta_grid_deg": [float(t) for t in thetas],
            "bias_grid": [float(b) for b in biases],
            "events": int(args.events),
            "seed": int(args.seed),
            "significance": float(args.significance),
        },
        "physical_assumptions": PHYSICAL_ASSUMPTION_NOTE,
        "rows": rows,
    }
    print(f"{'theta_b_deg':>12} {'det_bias':>9} {'xor_bias':>12} {'se':>10}")
    for row in rows:
        print(
            f"{row['theta_b_deg']:>12.2f} {row['detector_bias']:>9.3f} "
            f"{row['xor_bias']:>+12.6f} {row['xor_bias_se']:>10.6f}"
        )
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_chsh(args) -> int:
    _check_common(args)
    angles_a = _parse_angle_pair(args.angles_a, "angles-a")
    angles_b = _parse_angle_pair(args.angles_b, "angles-b")
    rng = RandomSource(args.seed)
    result = chsh_certify(
        (angles_a[0] * DEG, angles_a[1] * DEG),
        (angles_b[0] * DEG, angles_b[1] * DEG),
        args.events,
        rng,
    )
    # flagged only when the 2-sigma interval sits entirely above the bound
    violates = result.abs_s - 2.0 * result.std_error > 2.0
    report = {
        "version": __version__,
        "command": "chsh",
        "config": {
            "angles_a_deg": list(angles_a),
            "angles_b_deg": list(angles_b),
            "events_per_setting": int(args.events),
            "seed": int(args.seed),
        },
        "physical_assumptions": PHYSICAL_ASSUMPTION_NOTE,
        "s_value": result.s_value,
        "abs_s": result.abs_s,
        "std_error": result.std_error,
        "classical_bound": 2.0,
        "quantum_bound": 2.0 * math.sqrt(2.0),
        "violates_classical_bound": bool(violates),
        "terms": [
            {
                "theta_a_deg": t.theta_a / DEG,
                "theta_b_deg": t.theta_b / DEG,
                "sign": t.sign,
                "correlation": t.correlation,
                "std_error": t.std_error,
                "events": t.n,
            }
            for t in result.terms
        ],
    }
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    else:
        print(json.dumps(report, indent=2))
    flag = "exceeds classical bound 2" if violates else "does not exceed classical bound 2"
    print(
        f"S = {result.s_value:+.4f} (|S| = {result.abs_s:.4f} +/- {result.std_error:.4f}); "
        f"{flag}; quantum bound 2*sqrt(2) = {2 * math.sqrt(2):.4f}",
        file=sys.stderr if args.out else sys.stdout,
    )
    return EXIT_OK


def cmd_selftest(args) -> int:
    from . import selfcheck

    return selfcheck.run(verbose=True)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitrng",
        description=(
            "Simulate beam-splitter style quantum random number generation "
            "(multi-outcome, conjugate-mismatch, and entangled-pair XOR protocols), "
            "downgrade to bits, and verify with a statistical battery."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="run a protocol and write a packed bitstream")
    gen.add_argument(
        "--protocol",
        choices=("single-conjugate", "epr-xor", "epr-adaptive"),
        required=True,
    )
    gen.add_argument("--dim", type=int, default=None, help="Hilbert dimension (single-conjugate)")
    gen.add_argument("--spin", default=None, help="spin magnitude 1/2, 1, or 3/2 (epr protocols)")
    gen.add_argument("--theta-a", type=float, default=None, help="side A analyzer angle, degrees")
    gen.add_argument("--theta-b", type=float, default=None, help="side B analyzer angle, degrees")
    gen.add_argument(
        "--adapt",
        default=None,
        help="outcome-to-angle map for epr-adaptive, e.g. 0:90,1:90 (degrees)",
    )
    gen.add_argument("--prep-basis", choices=("computational", "fourier"), default=None)
    gen.add_argument("--prep-index", type=int, default=0)
    gen.add_argument("--meas-basis", choices=("computational", "fourier"), default=None)
    gen.add_argument("--detector-bias", type=float, default=0.0, help="stick probability beta")
    gen.add_argument("--preferred-outcome", type=int, default=1)
    gen.add_argument("--no-click-prob", type=float, default=0.0)
    gen.add_argument("--events", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--block-size", type=int, default=262144)
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--keep", default=None, help="two symbols kept by elimination, e.g. 0,1")
    gen.add_argument("--partition", default=None, help="identification classes, e.g. 0,1:2,3")
    gen.add_argument("--out", required=True)
    gen.add_argument("--format", choices=("raw", "hex"), default="raw")
    gen.add_argument("--significance", type=float, default=DEFAULT_SIGNIFICANCE)
    gen.set_defaults(func=cmd_generate)

    ana = sub.add_parser("analyze", help="run the battery on a stored bitstream")
    ana.add_argument("path")
    ana.add_argument("--significance", type=float, default=DEFAULT_SIGNIFICANCE)
    ana.set_defaults(func=cmd_analyze)

    sw = sub.add_parser("sweep", help="XOR bias over an angle and detector-bias grid")
    sw.add_argument("--theta-grid", required=True, help="degrees: 0,45,90 or START:STOP:STEP")
    sw.add_argument("--bias-grid", required=True, help="detector stick probabilities")
    sw.add_argument("--events", type=int, required=True, help="events per grid cell")
    sw.add_argument("--seed", type=int, required=True)
    sw.add_argument("--block-size", type=int, default=262144)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--significance", type=float, default=DEFAULT_SIGNIFICANCE)
    sw.add_argument("--out", default=None, help="write the JSON table here")
    sw.set_defaults(func=cmd_sweep)

    ch = sub.add_parser("chsh", help="CHSH certification run")
    ch.add_argument("--angles-a", default="0,90", help="side A setting pair, degrees")
    ch.add_argument("--angles-b", default="45,135", help="side B setting pair, degrees")
    ch.add_argument("--events", type=int, required=True, help="events per setting")
    ch.add_argument("--seed", type=int, required=True)
    ch.add_argument("--block-size", type=int, default=262144)
    ch.add_argument("--workers", type=int, default=1)
    ch.add_argument("--significance", type=float, default=DEFAULT_SIGNIFICANCE)
    ch.add_argument("--out", default=None)
    ch.set_defaults(func=cmd_chsh)

    st = sub.add_parser("selftest", help="reduced-scale invariant checks of all modules")
    st.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage/diagnostics; fold into our exit codes
        return EXIT_OK if exc.code in (0, None) else EXIT_FAIL
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())
