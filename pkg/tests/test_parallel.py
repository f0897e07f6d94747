import pytest

from thermolab._parallel import WORKERS_ENV, default_workers, map_ordered


def square(x):
    return x * x


@pytest.mark.parametrize("workers", [1, 2, 3])
def test_map_keeps_input_order(workers):
    assert map_ordered(square, range(17), workers) == [i * i for i in range(17)]


def test_default_workers_from_environment(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert default_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "4")
    assert default_workers() == 4
    for bad in ("0", "many"):
        monkeypatch.setenv(WORKERS_ENV, bad)
        with pytest.raises(ValueError):
            default_workers()
