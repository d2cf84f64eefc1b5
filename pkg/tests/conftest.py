import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stagework.bootstrap import Services, build_services


def make_services(data_dir: Path, start: bool = True, cores: int = 4,
                  **kwargs) -> Services:
    """Service stack with fast ticks and a deterministic 4-core node
    (the node sized to the host machine is replaced)."""
    kwargs.setdefault("poll_interval", 0.1)
    kwargs.setdefault("tick_interval", 0.05)
    svc = build_services(data_dir, **kwargs)
    if not any(n.name == "node1" and n.cores_total == cores
               for n in svc.executor.nodes()):
        for node in svc.executor.nodes():
            svc.executor.remove_node(node.name)
        svc.executor.add_node("node1", cores, 8 * (1 << 30))
    if start:
        svc.start()
    return svc


@pytest.fixture
def services(tmp_path):
    svc = make_services(tmp_path / "data")
    yield svc
    svc.stop()


@pytest.fixture
def admin(services):
    return services.auth.create_user("boss", "boss-pw", is_admin=True)


@pytest.fixture
def alice(services):
    return services.auth.create_user("alice", "alice-pw")


@pytest.fixture
def bob(services):
    return services.auth.create_user("bob", "bob-pw")


@pytest.fixture
def client(services, admin, alice, bob):
    from fastapi.testclient import TestClient

    from stagework.api import create_app
    return TestClient(create_app(services))


def login(client, username: str, password: str) -> dict:
    """Authenticate over HTTP and return ready-to-use request headers."""
    r = client.post("/api/auth/login",
                    json={"username": username, "password": password})
    assert r.status_code == 200, r.text
    return {"Authorization": f"Bearer {r.json()['token']}"}


@pytest.fixture
def as_alice(client):
    return login(client, "alice", "alice-pw")


@pytest.fixture
def as_bob(client):
    return login(client, "bob", "bob-pw")


@pytest.fixture
def as_admin(client):
    return login(client, "boss", "boss-pw")


def pytest_terminal_summary(terminalreporter):
    """Echo acceptance verdict lines past output capture."""
    verdicts = sys.modules.get("test_acceptance") and \
        sys.modules["test_acceptance"].VERDICTS
    if verdicts:
        terminalreporter.write_line("")
        for line in verdicts:
            terminalreporter.write_line(line)
