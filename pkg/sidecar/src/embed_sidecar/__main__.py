"""Run the service: EMBED_MODEL, EMBED_HOST, EMBED_PORT select the setup."""

import os

import uvicorn

from embed_sidecar.service import create_app


def main():
    host = os.environ.get("EMBED_HOST", "127.0.0.1")
    port = int(os.environ.get("EMBED_PORT", "8900"))
    uvicorn.run(create_app(), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
