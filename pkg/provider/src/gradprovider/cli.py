"""Entry point: provider --model <path> [--tcp host:port]."""

import argparse
import sys

from .model import ModelError, load_hosted_model
from .server import serve_stdio, serve_tcp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="provider",
        description="Serve a JSON model's loss/gradient/prediction over the "
                    "newline-delimited JSON protocol (stdio by default).",
    )
    parser.add_argument("--model", required=True, help="model JSON file")
    parser.add_argument("--tcp", default=None, metavar="HOST:PORT",
                        help="serve over TCP instead of stdio")
    args = parser.parse_args(argv)

    try:
        model = load_hosted_model(args.model)
    except ModelError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1

    if args.tcp:
        host, _, port = args.tcp.rpartition(":")
        if not host or not port.isdigit():
            print(f"fatal: bad --tcp value '{args.tcp}'", file=sys.stderr)
            return 1
        serve_tcp(model, host, int(port))
    else:
        serve_stdio(model)
    return 0


if __name__ == "__main__":
    sys.exit(main())
