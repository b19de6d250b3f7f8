import pytest

from cartframes.frames import CartesianFrame
from cartframes.objects import CartesianObject

# The 3x3 frame with nine distinct worlds: row a_i covers w_{3i-2}..w_{3i}.
GRID3_ROWS = [
    ["w1", "w2", "w3"],
    ["w4", "w5", "w6"],
    ["w7", "w8", "w9"],
]


@pytest.fixture(scope="session")
def grid3() -> CartesianFrame:
    return CartesianFrame.build(
        ["a1", "a2", "a3"], ["e1", "e2", "e3"], GRID3_ROWS
    )


@pytest.fixture(scope="session")
def grid3_raw():
    actions = ["a1", "a2", "a3"]
    envs = ["e1", "e2", "e3"]
    out = {
        (a, e): GRID3_ROWS[i][j]
        for i, a in enumerate(actions)
        for j, e in enumerate(envs)
    }
    worlds = [f"w{i}" for i in range(1, 10)]
    return actions, envs, worlds, out


@pytest.fixture(scope="session")
def coord2() -> CartesianObject:
    """2 agents x 1 env: (u,l)->w1 (u,r)->w2 (d,l)->w3 (d,r)->w4."""
    return CartesianObject.build(
        [["u", "d"], ["l", "r"]], ["e"], ["w1", "w2", "w3", "w4"]
    )
