"""Run the service: ``python -m phem_sidecar`` or the ``phem-sidecar`` script."""

from __future__ import annotations

import argparse
import logging

from .app import create_app
from .config import ServiceConfig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="phem-sidecar", description=__doc__)
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--text-encoder", default=None, help="text encoder checkpoint id")
    parser.add_argument("--mlm", default=None, help="masked LM checkpoint id")
    parser.add_argument("--device", default=None, help="torch device, e.g. cpu or cuda")
    parser.add_argument("--max-batch", type=int, default=None)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    config = ServiceConfig.from_env(
        host=args.host,
        port=args.port,
        text_encoder_id=args.text_encoder,
        mlm_id=args.mlm,
        device=args.device,
        max_batch=args.max_batch,
    )
    app = create_app(config, load_on_startup=True)

    import uvicorn

    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
