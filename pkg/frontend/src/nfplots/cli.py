"""Command line driver: ``plots --spec figs.cfg --in results/ --out figures/``.

The spec file is flat ``figN = input.csv[, more.csv]`` text mapping figure
ids to their input CSVs (paths relative to ``--in``).  Outputs land in
``--out`` as ``figN.png`` + ``figN.svg``.
"""

import argparse
import sys
import warnings
from pathlib import Path

from .figures import FIGURE_IDS, FigureSpec, render_figures
from .tables import SchemaError

EXIT_OK = 0
EXIT_SKIPPED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def parse_figure_spec(text: str, in_dir: str, out_dir: str) -> list[FigureSpec]:
    """Parse the spec file text into FigureSpec entries, in file order."""
    specs: list[FigureSpec] = []
    seen: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"line {lineno}: expected 'figN = file.csv, ...'")
        key, _, value = (part.strip() for part in line.partition("="))
        if not key.startswith("fig") or not key[3:].isdigit():
            raise SchemaError(f"line {lineno}: unknown key {key!r}")
        figure = int(key[3:])
        if figure not in FIGURE_IDS:
            raise SchemaError(f"line {lineno}: unknown figure id {figure}")
        if figure in seen:
            raise SchemaError(f"line {lineno}: duplicate key {key!r}")
        seen.add(figure)
        inputs = tuple(
            str(Path(in_dir) / part.strip()) for part in value.split(",") if part.strip()
        )
        if not inputs:
            raise SchemaError(f"line {lineno}: no input CSVs for {key}")
        specs.append(
            FigureSpec(figure=figure, inputs=inputs, output=str(Path(out_dir) / key))
        )
    if not specs:
        raise SchemaError("spec file names no figures")
    return specs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render the standard figures from harness CSVs"
    )
    parser.add_argument("--spec", required=True, help="figure spec file")
    parser.add_argument(
        "--in", dest="in_dir", default=".", help="directory holding the input CSVs"
    )
    parser.add_argument("--out", dest="out_dir", default=".", help="output directory")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="pin styling and strip volatile metadata for byte-identical output",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            text = Path(args.spec).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise SchemaError(f"spec file not found: {args.spec}") from None
        specs = parse_figure_spec(text, args.in_dir, args.out_dir)
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            written, skipped = render_figures(specs, deterministic=args.deterministic)
        for warning in caught:
            print(f"warning: {warning.message}", file=sys.stderr)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    if skipped:
        print(f"skipped {len(skipped)} figure(s): "
              + ", ".join(f"fig{n}" for n in skipped), file=sys.stderr)
        return EXIT_SKIPPED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
