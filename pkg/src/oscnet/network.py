"""Oscillator network construction and validation.

A network is a set of harmonic oscillators with natural frequencies
``omega`` (units of the reference frequency, which is set to 1) and a
symmetric coupling matrix ``coupling`` (units of reference frequency
squared, zero diagonal).  The network is summarized by the Hamiltonian
matrix ``H[m, n] = omega_m**2 * delta_mn + coupling[m, n] * (1 - delta_mn)``,
which must be positive definite for the network to support stable
oscillations.

Network files use a plain-text key-value format with two sections::

    [nodes]
    <index> = <omega>
    [edges]
    <i> <j> = <coupling>

Floats are written with shortest round-trip decimal representation, so a
save/load cycle is lossless at full binary precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DirectLinkForbidden,
    ExhaustedRetries,
    NonPositiveDefinite,
    NonPositiveFrequency,
    NonSymmetricCoupling,
)

__all__ = [
    "NetworkSpec",
    "build_network",
    "random_network",
    "attach_pair",
    "hamiltonian_matrix",
    "save_network",
    "load_network",
]


@dataclass(frozen=True)
class NetworkSpec:
    """Validated, immutable description of an oscillator network.

    Attributes
    ----------
    omega : ndarray, shape (n,)
        Node natural frequencies, all strictly positive.
    coupling : ndarray, shape (n, n)
        Symmetric coupling matrix with zero diagonal.
    """

    omega: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        coupling = np.asarray(self.coupling, dtype=float)
        omega.setflags(write=False)
        coupling.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coupling", coupling)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    def hamiltonian(self) -> np.ndarray:
        """Hamiltonian matrix of the network (fresh writable copy)."""
        return hamiltonian_matrix(self)

    def with_omega(self, node: int, value: float) -> "NetworkSpec":
        """Copy of the spec with one node frequency replaced (revalidated)."""
        omega = self.omega.copy()
        omega[node] = value
        return build_network(omega, self.coupling)

    def with_coupling(self, i: int, j: int, value: float) -> "NetworkSpec":
        """Copy of the spec with one coupling replaced symmetrically."""
        if i == j:
            raise NonSymmetricCoupling("cannot set a diagonal coupling")
        coupling = self.coupling.copy()
        coupling[i, j] = value
        coupling[j, i] = value
        return build_network(self.omega, coupling)


def hamiltonian_matrix(net: NetworkSpec) -> np.ndarray:
    """Assemble the Hamiltonian matrix from frequencies and couplings.

    Pure function: the same spec always yields an identical matrix.
    """
    h = net.coupling.copy()
    np.fill_diagonal(h, net.omega**2)
    return h


def _check_positive_definite(h: np.ndarray) -> None:
    eigvals = np.linalg.eigvalsh(h)
    if eigvals[0] <= 0.0:
        raise NonPositiveDefinite(
            f"network has unstable modes (min eigenvalue {eigvals[0]:.6g})"
        )


def build_network(omega, coupling) -> NetworkSpec:
    """Validate frequencies and couplings and return a NetworkSpec.

    Parameters
    ----------
    omega : array_like, shape (n,)
        Strictly positive node frequencies.
    coupling : array_like, shape (n, n)
        Exactly symmetric coupling matrix with zero diagonal.

    Raises
    ------
    NonPositiveFrequency, NonSymmetricCoupling, DimensionMismatch,
    NonPositiveDefinite
    """
    omega = np.asarray(omega, dtype=float)
    coupling = np.asarray(coupling, dtype=float)
    if omega.ndim != 1:
        raise DimensionMismatch("omega must be a 1-d array")
    n = omega.shape[0]
    if coupling.shape != (n, n):
        raise DimensionMismatch(
            f"coupling shape {coupling.shape} does not match {n} nodes"
        )
    if not np.all(omega > 0.0):
        raise NonPositiveFrequency("all node frequencies must be > 0")
    if not np.array_equal(coupling, coupling.T):
        raise NonSymmetricCoupling("coupling matrix must be exactly symmetric")
    if np.any(np.diag(coupling) != 0.0):
        raise NonSymmetricCoupling("coupling matrix must have zero diagonal")
    spec = NetworkSpec(omega=omega.copy(), coupling=coupling.copy())
    _check_positive_definite(hamiltonian_matrix(spec))
    return spec


def random_network(
    n: int,
    p: float,
    freq_low: float,
    freq_high: float,
    coupling_mean: float,
    coupling_sd: float,
    seed: int,
    max_retries: int = 100,
) -> NetworkSpec:
    """Sample a stable Erdos-Renyi network, deterministically per seed.

    Edges appear independently with probability ``p``; present-edge weights
    are normal(coupling_mean, coupling_sd); node frequencies are uniform on
    [freq_low, freq_high].  Unstable samples (Hamiltonian matrix not
    positive definite) are rejected and resampled, up to ``max_retries``
    attempts.

    Raises
    ------
    ExhaustedRetries
        If no stable network is found within the retry cap.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("connection probability must be in [0, 1]")
    if freq_low > freq_high:
        raise ValueError("freq_low must not exceed freq_high")
    if freq_low <= 0.0:
        raise NonPositiveFrequency("frequency range must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        omega = rng.uniform(freq_low, freq_high, size=n)
        coupling = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    w = rng.normal(coupling_mean, coupling_sd)
                    coupling[i, j] = w
                    coupling[j, i] = w
        try:
            return build_network(omega, coupling)
        except NonPositiveDefinite:
            continue
    raise ExhaustedRetries(
        f"no stable {n}-node network found in {max_retries} attempts"
    )


def attach_pair(
    net: NetworkSpec,
    omega_a: float,
    omega_b: float,
    links_a,
    links_b,
) -> NetworkSpec:
    """Append two new nodes to a network, linked to existing nodes only.

    The new nodes get indices ``n`` and ``n + 1``.  ``links_a`` and
    ``links_b`` map existing nodes to coupling weights (a dict, or a
    sequence of ``(node, weight)`` pairs); a direct link between the two
    new nodes is forbidden.

    Raises
    ------
    DirectLinkForbidden, NonPositiveDefinite
    """
    n = net.n
    a, b = n, n + 1
    omega = np.concatenate([net.omega, [omega_a, omega_b]])
    coupling = np.zeros((n + 2, n + 2))
    coupling[:n, :n] = net.coupling
    for links, new in ((links_a, a), (links_b, b)):
        items = links.items() if hasattr(links, "items") else links
        for node, weight in items:
            node = int(node)
            if node in (a, b):
                raise DirectLinkForbidden(
                    "attached pair nodes may link only to the original network"
                )
            if not 0 <= node < n:
                raise DimensionMismatch(f"link target {node} outside network")
            coupling[new, node] = weight
            coupling[node, new] = weight
    return build_network(omega, coupling)


# --- file I/O ----------------------------------------------------------------

def save_network(net: NetworkSpec, path) -> None:
    """Write a network file (lossless round trip, see module docstring)."""
    lines = ["[nodes]"]
    for i, w in enumerate(net.omega):
        lines.append(f"{i} = {float(w)!r}")
    lines.append("")
    lines.append("[edges]")
    n = net.n
    for i in range(n):
        for j in range(i + 1, n):
            if net.coupling[i, j] != 0.0:
                lines.append(f"{i} {j} = {float(net.coupling[i, j])!r}")
    lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def load_network(path) -> NetworkSpec:
    """Read a network file written by :func:`save_network`."""
    section = None
    omegas: dict[int, float] = {}
    edges: list[tuple[int, int, float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip().lower()
                if section not in ("nodes", "edges"):
                    raise ValueError(f"{path}:{lineno}: unknown section {section!r}")
                continue
            if "=" not in line or section is None:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if section == "nodes":
                omegas[int(key)] = float(value)
            else:
                i_str, j_str = key.split()
                edges.append((int(i_str), int(j_str), float(value)))
    n = len(omegas)
    if sorted(omegas) != list(range(n)):
        raise ValueError(f"{path}: node indices must be 0..{n - 1}")
    omega = np.array([omegas[i] for i in range(n)])
    coupling = np.zeros((n, n))
    for i, j, w in edges:
        coupling[i, j] = w
        coupling[j, i] = w
    return build_network(omega, coupling)
