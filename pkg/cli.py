"""
Command-line entry point.

    python cli.py verify gram.txt
    python cli.py gerzon --d 10 --p 3 --output t10.cert
    python cli.py scan --input srg.csv --output scan.csv --pmax 73
    python cli.py nonexist --d 5 --n 15 --primes 3,5,7,19 --output dim5.json

Exit status: 0 success, 1 verified negative result, 2 input error,
3 internal consistency failure.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import pandas as pd

from cliquesearch import (ExistenceWitness, NonexistenceCertificate,
                          load_search_result, nonexistence_pipeline,
                          save_search_result)
from constructions import (SCAN_COLUMNS, SIGN_CONVENTIONS, construct,
                           get_available_modes, read_scan_input, scan,
                           scan_frame, steiner_modular, triangular_gerzon,
                           write_scan_csv)
from frames import (EtfCertificate, TheoremViolation, certificate_record,
                    load_certificate, naimark, project_real_signature,
                    save_certificate, verify_etf)
from gf import make_field
from graphs import generate, get_available_families
from matgf import IntMat, MatGF, read_matrix
from utils import parse_bool, resolve_workers

logger = logging.getLogger(__name__)

COMMANDS = ("verify", "construct", "scan", "gerzon", "steiner", "naimark", "project-real", "nonexist", "report")

# flags each command needs before it runs
REQUIRED = {
    "verify": ("inputs",),
    "construct": ("family", "p", "mode"),
    "scan": ("inputs",),
    "gerzon": ("d", "p"),
    "steiner": ("m", "p"),
    "naimark": ("inputs",),
    "project-real": ("inputs", "d", "p"),
    "nonexist": ("d", "n"),
    "report": (),
}


@dataclass
class RunConfig:
    command: str
    inputs: List[Path] = field(default_factory=list)
    output: Optional[Path] = None
    p: Optional[int] = None
    l: int = 1
    d: Optional[int] = None
    n: Optional[int] = None
    m: Optional[int] = None
    family: Optional[str] = None
    mode: Optional[str] = None
    pmax: Optional[int] = None
    dmax: Optional[int] = None
    workers: int = 1
    real_exists: bool = False
    sign: str = "theorem"
    delta: Optional[str] = None
    primes: Optional[List[int]] = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}; available: {', '.join(COMMANDS)}")
        for name in REQUIRED[self.command]:
            value = getattr(self, name)
            if value is None or value == []:
                flag = "an input file" if name == "inputs" else f"--{name}"
                raise ValueError(f"{self.command} needs {flag}")
        if self.command == "construct":
            if self.mode not in get_available_modes():
                raise ValueError(f"--mode must be one of {', '.join(get_available_modes())}")
            if self.family == "from_edge_list" and not self.inputs:
                raise ValueError("--family edges needs --input with an edge list")
            if self.family != "from_edge_list" and self.m is None:
                raise ValueError(f"--family {self.family} needs --m")
        if self.sign not in SIGN_CONVENTIONS:
            raise ValueError(f"--sign must be one of {SIGN_CONVENTIONS}")
        if self.l not in (1, 2):
            raise ValueError(f"--l must be 1 or 2, got {self.l}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Equiangular tight frames over finite fields.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("files", nargs="*", type=Path, help="input files (same as --input)")
    parser.add_argument("--input", action="append", type=Path, default=[])
    parser.add_argument("--output", type=Path)
    parser.add_argument("--p", type=int)
    parser.add_argument("--l", type=int, default=1)
    parser.add_argument("--d", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--family", help=f"one of {', '.join(get_available_families())}, or 'edges'")
    parser.add_argument("--mode", help=f"one of {', '.join(get_available_modes())}")
    parser.add_argument("--pmax", type=int)
    parser.add_argument("--dmax", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--real-exists", default="false")
    parser.add_argument("--sign", default="theorem", choices=SIGN_CONVENTIONS)
    parser.add_argument("--delta", help="square root of n-1 to use when projecting with n = 2d")
    parser.add_argument("--primes", help="comma-separated primes for nonexist")
    parser.add_argument("--verbose", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    family = "from_edge_list" if args.family == "edges" else args.family
    primes = None
    if args.primes:
        try:
            primes = [int(x) for x in args.primes.split(",") if x.strip()]
        except ValueError:
            raise ValueError(f"--primes must be a comma-separated list of integers, got {args.primes!r}")
    config = RunConfig(
        command=args.command, inputs=list(args.files) + list(args.input), output=args.output,
        p=args.p, l=args.l, d=args.d, n=args.n, m=args.m, family=family, mode=args.mode,
        pmax=args.pmax, dmax=args.dmax, workers=resolve_workers(args.workers),
        real_exists=parse_bool(args.real_exists), sign=args.sign, delta=args.delta, primes=primes,
    )
    config.validate()
    return config


def _emit(cert: EtfCertificate, output: Optional[Path]) -> None:
    print(pd.DataFrame([certificate_record(cert)]).to_string(index=False))
    if output is not None:
        gram_path = save_certificate(cert, output)
        print(f"wrote {output} and {gram_path}")


def _numbered(output: Optional[Path], i: int, total: int) -> Optional[Path]:
    if output is None or total == 1:
        return output
    return output.with_name(f"{output.stem}_{i}{output.suffix}")


def _read_field_matrix(path: Path) -> MatGF:
    M = read_matrix(path)
    if not isinstance(M, MatGF):
        raise ValueError(f"{path}: expected a matrix over a field, found an integer matrix")
    return M


def _report_frame(path: Path) -> pd.DataFrame:
    if path.stat().st_size == 0:
        return pd.DataFrame()
    if path.suffix == ".json":
        result = load_search_result(path)
        if isinstance(result, NonexistenceCertificate):
            print(f"verdict: {result.verdict} for n={result.n} in dimension {result.d}")
            return result.to_frame()
        return pd.DataFrame([certificate_record(result.certificate, sign="raw")])
    if path.suffix == ".csv":
        df = pd.read_csv(path)
        missing = set(SCAN_COLUMNS) - set(df.columns)
        if missing:
            raise ValueError(f"{path}: not a scan table, missing {sorted(missing)}")
        flags = df["flags"].fillna("")
        print(f"gerzon-equality rows: {int(flags.str.contains('gerzon-equality').sum())}, "
              f"gerzon-violation rows: {int(flags.str.contains('gerzon-violation').sum())}")
        return df[["v", "k", "lambda", "mu", "p", "d", "n", "a", "c", "flags"]]
    return pd.DataFrame([certificate_record(load_certificate(path))])


def dispatch(config: RunConfig) -> int:
    """
    Run one command; returns the exit status.
    """
    cmd = config.command
    if cmd == "verify":
        G = _read_field_matrix(config.inputs[0])
        cert = verify_etf(G)
        if cert is None:
            print(f"{config.inputs[0]}: not the Gram matrix of an ETF")
            return 1
        _emit(cert, config.output)
        return 0

    elif cmd == "construct":
        arg = config.inputs[0] if config.family == "from_edge_list" else config.m
        graph = generate(config.family, arg)
        certs = construct(graph, config.p, config.mode)
        if not certs:
            print(f"{config.mode} construction does not apply to {graph!r} at p={config.p}")
            return 1
        for i, cert in enumerate(certs):
            _emit(cert, _numbered(config.output, i, len(certs)))
        return 0

    elif cmd == "scan":
        rows = [r for path in config.inputs for r in read_scan_input(path)]
        out = scan(rows, pmax=config.pmax, dmax=config.dmax, workers=config.workers, sign=config.sign)
        if config.output is not None:
            write_scan_csv(out, config.output)
            print(f"wrote {len(out)} rows to {config.output}")
        else:
            print(scan_frame(out).to_string(index=False))
        return 0

    elif cmd == "gerzon":
        _emit(triangular_gerzon(config.d, config.p), config.output)
        return 0

    elif cmd == "steiner":
        _emit(steiner_modular(config.m, config.p), config.output)
        return 0

    elif cmd == "naimark":
        _emit(naimark(load_certificate(config.inputs[0])), config.output)
        return 0

    elif cmd == "project-real":
        S = read_matrix(config.inputs[0])
        if not isinstance(S, IntMat):
            raise ValueError(f"{config.inputs[0]}: expected an integer signature matrix")
        delta = make_field(config.p, config.l).parse(config.delta) if config.delta else None
        _emit(project_real_signature(S, config.d, config.p, config.l, delta), config.output)
        return 0

    elif cmd == "nonexist":
        result = nonexistence_pipeline(config.d, config.n, config.primes, config.real_exists, config.workers)
        if config.output is not None:
            save_search_result(result, config.output)
        if isinstance(result, ExistenceWitness):
            print(f"existence witness in F_{result.geom.p}^{result.d} (s={result.geom.s}), a={result.a}")
            for v in result.vectors:
                print(" ".join(map(str, v)))
            return 0
        print(result.to_frame().to_string(index=False))
        print(f"verdict: {result.verdict}")
        return 1 if result.verdict == "nonexistent" else 0

    elif cmd == "report":
        if not config.inputs:
            print("no rows")
            return 0
        for path in config.inputs:
            print(f"== {path} ==")
            frame = _report_frame(path)
            print(frame.to_string(index=False) if not frame.empty else "no rows")
        return 0

    raise ValueError(f"unknown command {cmd!r}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return dispatch(config_from_args(args))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TheoremViolation as exc:
        logger.exception("internal consistency failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
