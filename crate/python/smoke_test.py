"""Smoke test for the pyqortho bindings.

Build and install first, e.g.
    maturin build --release -m crates/py/Cargo.toml -o target/wheels
    pip install --force-reinstall target/wheels/pyqortho-*.whl
"""

import math

import pyqortho


def main():
    disk = pyqortho.Domain.disk(1.0, "dirichlet")
    assert abs(disk.area() - math.pi) < 1e-12
    assert abs(disk.perimeter() - 2 * math.pi) < 1e-12

    e = pyqortho.energies(disk, modes=10)
    j01 = 2.404825557695773
    assert len(e) == 10 and abs(e[0] - j01**2) < 1e-9, e[:3]

    energies, q = pyqortho.q_matrix(disk.with_origin(0.5, 0.0), emax=100.0)
    r2 = 1.5**2 / 4
    for i, ei in enumerate(energies):
        assert abs(q[i][i] / (2 * ei) - 1) < 1e-8
        for j in range(i):
            assert abs(q[i][j]) <= r2 * (ei - energies[j]) ** 2 + 1e-9 * (ei + energies[j])

    rect = pyqortho.Domain.from_toml('shape = "rectangle"\na = 1.3\nb = 0.8\nbc = "neumann"\n')
    assert pyqortho.energies(rect, modes=1) == [0.0]
    assert "rectangle" in rect.to_toml()

    green = pyqortho.identity(1)
    assert "1/ε" in green and "u_n v" in green, green
    try:
        pyqortho.identity(7, equal=True)
    except ValueError as err:
        assert "7" in str(err)
    else:
        raise AssertionError("r² u v has no equal-energy identity")

    try:
        pyqortho.Domain.disk(1.0, "robin")
    except ValueError as err:
        assert "gamma" in str(err)
    else:
        raise AssertionError("robin without gamma must fail")

    ks = pyqortho.sweep_wavenumbers(disk, 2.3, 2.5)
    assert len(ks) == 1 and abs(ks[0] - j01) < 1e-6, ks
    print("pyqortho smoke test passed")


if __name__ == "__main__":
    main()
