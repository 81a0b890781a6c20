"""Command line / env entry point.

Configuration comes from the environment with flag overrides:
MODE (null|real), PORT, MODEL_DIR, CONTROL_MODEL_DIR.
"""

import argparse
import os

from .app import serve


def main(argv=None):
    parser = argparse.ArgumentParser(prog="diffusion-server")
    parser.add_argument("--port", type=int, default=int(os.environ.get("PORT", "8000")))
    parser.add_argument("--mode", choices=("null", "real"),
                        default=os.environ.get("MODE", "null"))
    parser.add_argument("--model-dir", default=os.environ.get("MODEL_DIR"))
    parser.add_argument("--control-model-dir",
                        default=os.environ.get("CONTROL_MODEL_DIR"))
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    serve(port=args.port, mode=args.mode, model_dir=args.model_dir,
          control_model_dir=args.control_model_dir, host=args.host)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
