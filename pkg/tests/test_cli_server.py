"""Thin-client mode: CLI subcommands forwarded to a live service instance."""

import json
import socket
import threading
import time

import pytest
import uvicorn

from onebit_doa.cli import main
from onebit_doa.service import app


@pytest.fixture(scope="module")
def server_url():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("service did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_geometry_via_server(server_url, capsys):
    code = main(["geometry", "0,2,3,4,6,9", "--server", server_url])
    assert code == 0
    body = json.loads(capsys.readouterr().out)
    assert body["D"] == 9 and body["v"] == 8


def test_bounds_via_server(server_url, capsys):
    code = main(
        ["bounds", "--geometry", "0,2,3,4,6,9", "--thetas-deg=-20,30",
         "--snr-db", "3", "--n", "400", "--server", server_url]
    )
    assert code == 0
    body = json.loads(capsys.readouterr().out)
    assert body["crb_w_valid"] and len(body["crb_w_deg2"]) == 2
