"""The `vamix` command line: remixing, separation, masks, scoring, experiments.

Exit codes: 0 on success, 1 for usage problems (bad flags, missing
arguments, malformed values on the command line), 2 for processing failures
(unreadable files, mismatched dimensions, failed validation inside the
library). Outputs are deterministic: the same invocation on the same inputs
produces byte-identical files, so runs can be diffed and cached.

A JSON config file (--config) may supply defaults for any flag of any
subcommand, keyed by the flag's long name with dashes as underscores;
explicit command-line flags always win.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import __version__
from .audio_io import AudioClip, read_wav, write_wav
from .errors import VamixError
from .evaluation import DEFAULT_FILTER_LEN, bss_eval
from .harness import (
    DEFAULT_CORRUPT_RHO,
    DEFAULT_GAIN_GRID,
    make_pair,
    pairs_from_manifest,
    sweep_gains,
    synthetic_pairs,
    tune_smoothing,
)
from .masking import (
    DEFAULT_ALPHA,
    ideal_binary_masks,
    ideal_ratio_masks,
    random_binary_partition,
    read_mask_set,
    smooth_mask_set,
    write_mask_set,
)
from .remix import RemixSpec, remix, separate_source, slider_to_gain
from .spectral import StftParams, magnitude, stft


class UsageError(Exception):
    """Command-line level mistake; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route to our own code
        raise UsageError(message)


_LIST_VALUE_FLAGS = ("--gains", "--slider-gains", "--grid")
_NUMBER_LIST = re.compile(r"-[0-9.eE+,-]*[0-9][0-9.eE+,-]*")


def _merge_list_flags(argv: list[str]) -> list[str]:
    """Join `--grid -1,0,1` into `--grid=-1,0,1`.

    argparse reads any token with a leading dash as a new option, so comma
    lists that start with a negative number would otherwise need the `=`
    form. Only known list flags followed by something that looks like a
    numeric list are touched; real flags never match.
    """
    merged: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _LIST_VALUE_FLAGS and i + 1 < len(argv):
            nxt = argv[i + 1]
            if nxt.startswith("-") and _NUMBER_LIST.fullmatch(nxt):
                merged.append(f"{tok}={nxt}")
                i += 2
                continue
        merged.append(tok)
        i += 1
    return merged


def _parse_float_list(raw: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"could not parse {what} {raw!r}: expected comma-separated numbers") from exc


def _resolve_gains(args) -> tuple[float, ...]:
    if (args.gains is None) == (args.slider_gains is None):
        raise UsageError("exactly one of --gains or --slider-gains is required")
    if args.gains is not None:
        values = _parse_float_list(args.gains, "--gains")
    else:
        sliders = _parse_float_list(args.slider_gains, "--slider-gains")
        for v in sliders:
            if not 0.0 <= v <= 1.0:
                raise UsageError(f"slider positions must lie in [0, 1], got {v}")
        values = [slider_to_gain(v) for v in sliders]
    if not values:
        raise UsageError("gain list is empty")
    return tuple(values)


def _require(args, names: list[str]) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_"), None) in (None, []):
            raise UsageError(f"--{name} is required")


def _load_masks_for_clip(args, clip: AudioClip):
    mask_set = read_mask_set(args.masks)
    params = mask_set.params
    if params.sample_rate != clip.sample_rate:
        raise VamixError(
            f"mask set assumes {params.sample_rate} Hz but the mixture is at "
            f"{clip.sample_rate} Hz"
        )
    if not args.no_smoothing:
        mask_set = smooth_mask_set(mask_set, "zlbm", alpha=args.alpha)
    return mask_set, params


def _safe_label(label: str, fallback: str) -> str:
    cleaned = "".join(c if c.isalnum() or c in "-_" else "_" for c in label)
    return cleaned or fallback


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_remix(args) -> None:
    _require(args, ["mix", "masks", "out"])
    gains = _resolve_gains(args)
    clip = read_wav(args.mix)
    mask_set, params = _load_masks_for_clip(args, clip)
    spec = RemixSpec(mask_set=mask_set, gains=gains)
    out = remix(clip, spec, params)
    write_wav(args.out, out, format=args.format)
    print(args.out)


def _cmd_separate(args) -> None:
    _require(args, ["mix", "masks", "outdir"])
    clip = read_wav(args.mix)
    mask_set, params = _load_masks_for_clip(args, clip)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, mask in enumerate(mask_set):
        est = separate_source(clip, mask, params)
        path = outdir / f"{i:02d}_{_safe_label(mask.label, f'source_{i}')}.wav"
        write_wav(path, est, format=args.format)
        print(path)


def _oracle_mask_cmd(args, builder) -> None:
    _require(args, ["stems", "out"])
    if len(args.stems) < 2:
        raise UsageError("need at least two stem files")
    clips = [read_wav(p) for p in args.stems]
    params = StftParams(sample_rate=clips[0].sample_rate)
    mags = [magnitude(stft(c, params)) for c in clips]
    labels = [_safe_label(Path(p).stem, f"source_{i}") for i, p in enumerate(args.stems)]
    write_mask_set(builder(mags, labels=labels), args.out)
    print(args.out)


def _cmd_masks_ibm(args) -> None:
    _oracle_mask_cmd(args, ideal_binary_masks)


def _cmd_masks_irm(args) -> None:
    _oracle_mask_cmd(args, ideal_ratio_masks)


def _cmd_masks_rbm(args) -> None:
    _require(args, ["like", "out"])
    clip = read_wav(args.like)
    params = StftParams(sample_rate=clip.sample_rate)
    frames = params.frame_count(len(clip))
    mask_set = random_binary_partition(params, frames, args.sources, seed=args.seed)
    write_mask_set(mask_set, args.out)
    print(args.out)


def _cmd_masks_smooth(args) -> None:
    _require(args, ["inp", "out"])
    mask_set = read_mask_set(args.inp)
    smoothed = smooth_mask_set(
        mask_set,
        args.method,
        alpha=args.alpha,
        lifter_cutoff=args.cutoff,
        floor_db=args.floor_db,
    )
    write_mask_set(smoothed, args.out)
    print(args.out)


def _cmd_eval(args) -> None:
    _require(args, ["references"])
    if bool(args.estimates) == bool(args.masks):
        raise UsageError("provide estimate WAVs with --estimates, or --masks to render them")
    if args.masks:
        # Render the estimates here: separate the mixture with the masks
        # exactly as stored, so the report measures the masks themselves.
        _require(args, ["mixture"])
        mixture = read_wav(args.mixture)
        mask_set = read_mask_set(args.masks)
        params = mask_set.params
        if params.sample_rate != mixture.sample_rate:
            raise VamixError(
                f"mask set assumes {params.sample_rate} Hz but the mixture is at "
                f"{mixture.sample_rate} Hz"
            )
        estimates = [separate_source(mixture, m, params) for m in mask_set]
        labels = [
            _safe_label(m.label, f"source_{i}") for i, m in enumerate(mask_set)
        ]
    else:
        estimates = [read_wav(p) for p in args.estimates]
        mixture = read_wav(args.mixture) if args.mixture else None
        labels = [
            _safe_label(Path(p).stem, f"source_{i}")
            for i, p in enumerate(args.references)
        ]
    if len(estimates) != len(args.references):
        raise UsageError(
            f"{len(estimates)} estimates vs {len(args.references)} references"
        )
    references = [read_wav(p) for p in args.references]
    report = bss_eval(
        estimates,
        references,
        filter_len=args.filter_len,
        mixture=mixture,
        labels=labels,
    )
    payload = report.to_json_lines(clip_id=args.clip_id)
    if args.out:
        Path(args.out).write_text(payload)
        print(args.out)
    else:
        sys.stdout.write(payload)


def _gather_pairs(args, need: int | None = None):
    chosen = [bool(args.manifest), bool(args.stems), args.synthetic > 0]
    if sum(chosen) != 1:
        raise UsageError("choose exactly one of --manifest, --stems, or --synthetic")
    if args.manifest:
        return pairs_from_manifest(args.manifest, n_pairs=args.pairs, seed=args.seed)
    if args.stems:
        if len(args.stems) % 2 != 0:
            raise UsageError("--stems wants an even number of files (pairs)")
        paths = [Path(p) for p in args.stems]
        pairs = []
        for k in range(0, len(paths), 2):
            a, b = read_wav(paths[k]), read_wav(paths[k + 1])
            seg = min(len(a), len(b))
            pairs.append(
                make_pair(
                    a, b, segment_len=seg, seed=args.seed + k,
                    labels=(
                        _safe_label(paths[k].stem, "a"),
                        _safe_label(paths[k + 1].stem, "b"),
                    ),
                )
            )
        return pairs
    return synthetic_pairs(args.synthetic, seed=args.seed)


def _write_report(args, report) -> None:
    if args.out:
        out = Path(args.out)
        # a .csv output path gets the table form directly
        text = report.to_csv() if out.suffix.lower() == ".csv" else report.to_json()
        out.write_text(text)
        print(args.out)
    else:
        sys.stdout.write(report.to_json())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())


def _cmd_tune(args) -> None:
    pairs = _gather_pairs(args)
    grid = _parse_float_list(args.grid, "--grid") if args.grid else None
    result = tune_smoothing(
        pairs,
        method=args.method,
        param_grid=grid,
        corrupt_rho=args.rho,
        seed=args.seed,
    )
    _write_report(args, result)


def _cmd_sweep(args) -> None:
    pairs = _gather_pairs(args)
    if len(pairs) != 1:
        raise UsageError("sweep works on exactly one stem pair")
    grid = tuple(_parse_float_list(args.grid, "--grid")) if args.grid else DEFAULT_GAIN_GRID
    report = sweep_gains(
        pairs[0],
        grid=grid,
        alpha=args.alpha,
        corrupt_rho=args.rho,
        seed=args.seed,
        smoothing=not args.no_smoothing,
    )
    _write_report(args, report)


def _cmd_serve(args) -> None:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        alpha=args.alpha,
        smoothing=not args.no_smoothing,
        max_duration_s=args.max_duration,
        session_ttl_s=args.ttl,
        cors_origin=args.origin,
    )
    app = create_app(config, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


# ---------------------------------------------------------------------------
# Parser assembly


def _add_smoothing_flags(p: _Parser) -> None:
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="time-smoothing coefficient in [0, 1)")
    p.add_argument("--no-smoothing", action="store_true",
                   help="use masks exactly as given")


def _add_pair_source_flags(p: _Parser) -> None:
    p.add_argument("--manifest", help="stem manifest JSON")
    p.add_argument("--pairs", type=int, default=10,
                   help="pairs to draw from the manifest")
    p.add_argument("--stems", nargs="*", default=[],
                   help="explicit stem WAVs, two per pair")
    p.add_argument("--synthetic", type=int, default=0,
                   help="generate this many synthetic pairs instead")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(prog="vamix",
                     description="Mask-based remixing of mixed audio.")
    parser.add_argument("--version", action="version", version=f"vamix {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    parsers: dict[str, _Parser] = {}

    def add(name: str, handler, help_: str) -> _Parser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file of default flag values")
        p.set_defaults(handler=handler)
        parsers[name] = p
        return p

    p = add("remix", _cmd_remix, "apply per-source gains to a mixture")
    p.add_argument("--mix", help="mixture WAV")
    p.add_argument("--masks", help="mask-set file")
    p.add_argument("--gains", help="comma list of gain offsets in [-1, 1]; 0 = untouched")
    p.add_argument("--slider-gains", help="comma list of slider positions in [0, 1]; 0.5 = untouched")
    p.add_argument("-o", "--out", help="output WAV")
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    _add_smoothing_flags(p)

    p = add("separate", _cmd_separate, "render each masked source on its own")
    p.add_argument("--mix", help="mixture WAV")
    p.add_argument("--masks", help="mask-set file")
    p.add_argument("--outdir", help="directory for per-source WAVs")
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    _add_smoothing_flags(p)

    p = add("masks", None, "build or transform mask sets")
    masks_sub = p.add_subparsers(dest="masks_command", metavar="kind")

    mp = masks_sub.add_parser("ibm", help="hard oracle masks from stems")
    mp.add_argument("--config", help="JSON file of default flag values")
    mp.add_argument("--stems", nargs="*", default=[], help="stem WAVs")
    mp.add_argument("-o", "--out", help="output mask-set file")
    mp.set_defaults(handler=_cmd_masks_ibm)
    parsers["masks.ibm"] = mp

    mp = masks_sub.add_parser("irm", help="soft oracle masks from stems")
    mp.add_argument("--config", help="JSON file of default flag values")
    mp.add_argument("--stems", nargs="*", default=[], help="stem WAVs")
    mp.add_argument("-o", "--out", help="output mask-set file")
    mp.set_defaults(handler=_cmd_masks_irm)
    parsers["masks.irm"] = mp

    mp = masks_sub.add_parser("rbm", help="seeded random partition masks")
    mp.add_argument("--config", help="JSON file of default flag values")
    mp.add_argument("--like", help="WAV whose analysis grid the masks should match")
    mp.add_argument("--sources", type=int, default=2)
    mp.add_argument("--seed", type=int, default=0)
    mp.add_argument("-o", "--out", help="output mask-set file")
    mp.set_defaults(handler=_cmd_masks_rbm)
    parsers["masks.rbm"] = mp

    mp = masks_sub.add_parser("smooth", help="smooth the masks in a set")
    mp.add_argument("--config", help="JSON file of default flag values")
    mp.add_argument("--in", dest="inp", help="input mask-set file")
    mp.add_argument("--method", choices=("zlbm", "cbm"), default="zlbm")
    mp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    mp.add_argument("--cutoff", type=int, default=24, help="cepstral lifter cutoff")
    mp.add_argument("--floor-db", type=float, default=-80.0)
    mp.add_argument("-o", "--out", help="output mask-set file")
    mp.set_defaults(handler=_cmd_masks_smooth)
    parsers["masks.smooth"] = mp

    p = add("eval", _cmd_eval, "score estimates against references")
    p.add_argument("--estimates", nargs="*", default=[], help="estimated source WAVs")
    p.add_argument("--masks", help="mask-set file; estimates are rendered from --mix")
    p.add_argument("--references", "--refs", nargs="*", default=[],
                   help="reference stem WAVs")
    p.add_argument("--mixture", "--mix", help="original mixture WAV (enables NSDR)")
    p.add_argument("--filter-len", type=int, default=DEFAULT_FILTER_LEN)
    p.add_argument("--clip-id", default="", help="identifier echoed into each record")
    p.add_argument("-o", "--out", help="JSON-lines output path (default: stdout)")

    p = add("tune", _cmd_tune, "grid-search a smoothing parameter")
    _add_pair_source_flags(p)
    p.add_argument("--method", choices=("zlbm", "cbm"), default="zlbm")
    p.add_argument("--grid", help="comma list of parameter values")
    p.add_argument("--rho", type=float, default=DEFAULT_CORRUPT_RHO,
                   help="mask corruption probability")
    p.add_argument("-o", "--out", help="JSON or CSV report path (default: stdout JSON)")
    p.add_argument("--csv", help="also write a CSV table here")

    p = add("sweep", _cmd_sweep, "compare remixing routes over a gain grid")
    _add_pair_source_flags(p)
    p.add_argument("--grid", help="comma list of gain offsets")
    p.add_argument("--rho", type=float, default=DEFAULT_CORRUPT_RHO)
    _add_smoothing_flags(p)
    p.add_argument("-o", "--out", help="JSON or CSV report path (default: stdout JSON)")
    p.add_argument("--csv", help="also write a CSV table here")

    p = add("serve", _cmd_serve, "run the HTTP remixing service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--max-duration", type=float, default=120.0,
                   help="longest accepted mixture, seconds")
    p.add_argument("--ttl", type=float, default=3600.0,
                   help="idle seconds before a session is dropped")
    p.add_argument("--origin", default="*", help="allowed CORS origin")
    p.add_argument("--static", help="directory of static files to serve at /")
    _add_smoothing_flags(p)

    return parser, parsers


def _extract_config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(path: str, parsers: dict[str, _Parser]) -> None:
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    known = {
        action.dest
        for p in parsers.values()
        for action in p._actions
        if action.dest not in ("help", "command", "masks_command")
    }
    for key, value in payload.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise UsageError(f"config {path}: unknown option {key!r}")
        for p in parsers.values():
            if any(a.dest == dest for a in p._actions):
                p.set_defaults(**{dest: value})


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _merge_list_flags(argv)
        parser, parsers = build_parser()
        config_path = _extract_config_path(argv)
        if config_path:
            _apply_config(config_path, parsers)
        args = parser.parse_args(argv)
        handler = getattr(args, "handler", None)
        if handler is None:
            raise UsageError("a subcommand is required (see `vamix --help`)")
        handler(args)
        return 0
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except VamixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
