"""Thin command-line client of the experiment service.

By default the CLI mounts the service in-process; `--server URL` targets a
running remote instance instead.  Either way the client receives every output
file inline and writes it under `--out`, so results are byte-identical for a
given config and seed regardless of where the service runs.

Exit codes: 0 success, 2 usage error, 3 data error, 4 runtime failure.

Config files are flat key=value text; keys are experiment-specific overrides
(e.g. n_patterns=200, m=20, delta0=25).
"""

import argparse
from pathlib import Path
import sys

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_CATEGORY_EXIT = {"usage": EXIT_USAGE, "data": EXIT_DATA, "runtime": EXIT_RUNTIME}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchlearn",
        description="Run dendritic-classifier experiments against the "
                    "branchlearn service.")
    parser.add_argument("--experiment", help="experiment name (see --list)")
    parser.add_argument("--config", help="flat key=value overrides file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--scale", type=float, default=1.0,
                        help="protocol scale; 1.0 is the reference size")
    parser.add_argument("--out", default="results",
                        help="directory for result files")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--list", nargs="?", const="", metavar="FILTER",
                        help="list experiments (optionally filtered) and exit")
    parser.add_argument("--server", help="URL of a running service; default "
                                         "runs the service in-process")
    parser.add_argument("--data-dir", default="data",
                        help="directory with benchmark dataset files")
    parser.add_argument("--fetch-data", action="store_true",
                        help="download the benchmark datasets into --out")
    return parser


def read_config_file(path: str) -> dict:
    text = Path(path).read_text()
    overrides = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {line!r}")
        key, _, value = line.partition("=")
        overrides[key.strip()] = value.strip()
    return overrides


def _client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app
    return TestClient(create_app())


def _fail_from_response(resp) -> int:
    try:
        body = resp.json()
        err = body.get("error", {})
        category = err.get("category", "runtime")
        message = err.get("message", resp.text)
    except Exception:   # noqa: BLE001 - malformed error body
        category, message = "runtime", resp.text
    print(f"error ({category}): {message}", file=sys.stderr)
    return _CATEGORY_EXIT.get(category, EXIT_RUNTIME)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)

    if args.fetch_data:
        from .datasets import DatasetError, fetch_datasets
        try:
            fetched = fetch_datasets(args.out)
        except DatasetError as exc:
            print(f"error (data): {exc}", file=sys.stderr)
            return EXIT_DATA
        for path in fetched:
            print(path)
        return 0

    with _client(args.server) as client:
        if args.list is not None:
            resp = client.get("/experiments",
                              params={"filter": args.list} if args.list else None)
            if resp.status_code != 200:
                return _fail_from_response(resp)
            for item in resp.json()["experiments"]:
                print(f"{item['name']:12s} {item['description']}")
            return 0

        if not args.experiment:
            print("error (usage): --experiment or --list is required",
                  file=sys.stderr)
            return EXIT_USAGE

        overrides = {}
        if args.config:
            try:
                overrides = read_config_file(args.config)
            except (OSError, ValueError) as exc:
                print(f"error (usage): bad config file: {exc}", file=sys.stderr)
                return EXIT_USAGE

        request = {
            "experiment": args.experiment,
            "seed": args.seed,
            "scale": args.scale,
            "threads": args.threads,
            "data_dir": args.data_dir,
            "overrides": overrides,
        }
        resp = client.post("/experiments/run", json=request)
        if resp.status_code != 200:
            return _fail_from_response(resp)
        payload = resp.json()
        out_dir = Path(args.out) / args.experiment
        out_dir.mkdir(parents=True, exist_ok=True)
        for item in payload["files"]:
            (out_dir / item["name"]).write_text(item["text"])
        print(f"wrote {len(payload['files'])} files to {out_dir}")
        for row in payload["summary"]:
            print("  " + ", ".join(f"{k}={v}" for k, v in row.items()))
        return 0


if __name__ == "__main__":
    sys.exit(main())
