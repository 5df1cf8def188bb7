"""Time propagation: Schrodinger equation for pure states and the Lindblad
master equation for density matrices.

Both propagators use an adaptive embedded explicit Runge-Kutta scheme
(DOP853) with tight default tolerances; norm and trace are never renormalized,
so their drift doubles as an integration diagnostic.  Density matrices are
integrated directly as 100 x 100 arrays; collapse operators are kept sparse
(a handful of entries each), so the right-hand side stays cheap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .atom import COMP_INDICES, DIM, LEVEL_INDEX, LEVELS, N_LEVELS, AtomBasis, CompositeHamiltonian
from .errors import ConfigError, PropagationError
from .params import RYDBERG_LABELS, PhysicalSetting

RTOL_DEFAULT = 1e-10
ATOL_DEFAULT = 1e-12


@dataclass
class QuantumState:
    """A pure state vector or density matrix over the two-atom space."""

    data: np.ndarray
    kind: str  # "ket" | "density"

    @classmethod
    def ket(cls, vec) -> "QuantumState":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (DIM,):
            raise ConfigError(f"ket must have shape ({DIM},)")
        return cls(vec, "ket")

    @classmethod
    def density(cls, mat) -> "QuantumState":
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (DIM, DIM):
            raise ConfigError(f"density matrix must have shape ({DIM}, {DIM})")
        return cls(mat, "density")

    @property
    def is_ket(self) -> bool:
        return self.kind == "ket"

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def as_density(self) -> "QuantumState":
        if self.is_ket:
            return QuantumState(np.outer(self.data, self.data.conj()), "density")
        return QuantumState(self.data.copy(), "density")

    def populations(self) -> np.ndarray:
        """Diagonal populations over the 100 composite basis states."""
        if self.is_ket:
            return np.abs(self.data) ** 2
        return np.real(np.diagonal(self.data)).copy()

    def computational_populations(self) -> np.ndarray:
        return self.populations()[list(COMP_INDICES)]


def basis_state(control_label: str, target_label: str) -> QuantumState:
    """Composite product state |control, target> by level labels."""
    vec = np.zeros(DIM, dtype=complex)
    vec[N_LEVELS * LEVEL_INDEX[control_label] + LEVEL_INDEX[target_label]] = 1.0
    return QuantumState.ket(vec)


def reduced_populations(state: QuantumState) -> tuple[np.ndarray, np.ndarray]:
    """Per-atom level populations (control, target), each length 10."""
    pops = state.populations().reshape(N_LEVELS, N_LEVELS)
    return pops.sum(axis=1), pops.sum(axis=0)


@dataclass(frozen=True, eq=False)
class CollapseSet:
    """Spontaneous-emission collapse operators, one per Rydberg level.

    Each single-atom operator has exactly three entries in the column of its
    Rydberg level: decay to the sink g with branch 7/8 and to each qubit state
    with branch 1/16, entering as square roots of those probabilities so the
    total rate is exactly Gamma_r.  The composite operator acts additively on
    both atoms: C_r = c_r (x) 1 + 1 (x) c_r.
    """

    labels: tuple[str, ...]
    rates: tuple[float, ...]
    single: tuple          # 10x10 csr matrices
    composite: tuple       # 100x100 csr matrices


def build_collapse_set(setting: PhysicalSetting, basis: AtomBasis,
                       literal_amplitudes: bool = False) -> CollapseSet:
    """Collapse operators from the setting's lifetimes and branching fractions.

    ``literal_amplitudes=True`` puts the branching fractions into the operator
    directly instead of their square roots (total rate then differs from
    Gamma_r); kept only for sensitivity analysis.
    """
    branches = (setting.decay_branch_g, setting.decay_branch_0, setting.decay_branch_1)
    amps = branches if literal_amplitudes else tuple(np.sqrt(b) for b in branches)
    targets = (LEVEL_INDEX["g"], LEVEL_INDEX["q0"], LEVEL_INDEX["q1"])
    eye = sparse.identity(N_LEVELS, format="csr")
    labels, rates, singles, composites = [], [], [], []
    for label in RYDBERG_LABELS:
        level = basis.level(label)
        gamma = level.decay_rate
        col = LEVEL_INDEX[label]
        data = [np.sqrt(gamma) * a for a in amps]
        c = sparse.csr_matrix((data, (targets, [col] * 3)), shape=(N_LEVELS, N_LEVELS))
        labels.append(label)
        rates.append(gamma)
        singles.append(c)
        composites.append((sparse.kron(c, eye) + sparse.kron(eye, c)).tocsr())
    return CollapseSet(tuple(labels), tuple(rates), tuple(singles), tuple(composites))


def _resolve_envelopes(envelopes):
    if envelopes is None:
        return None, None
    eps_c, eps_t = envelopes
    return eps_c, eps_t


def _solve(rhs, y0, t_span, rtol, atol, t_eval, max_step):
    if max_step is None:
        max_step = (t_span[1] - t_span[0]) / 8.0
    sol = solve_ivp(rhs, t_span, y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, max_step=max_step, dense_output=False)
    if not sol.success:
        reached = sol.t[-1] if sol.t.size else t_span[0]
        raise PropagationError(
            f"integration stalled at t = {reached:.6g} ns: {sol.message}"
        )
    return sol


def propagate_schrodinger(h: CompositeHamiltonian, envelopes, psi0, t_span,
                          rtol: float = RTOL_DEFAULT, atol: float = ATOL_DEFAULT,
                          t_eval=None, max_step=None):
    """Integrate i dpsi/dt = H(t) psi over one segment.

    ``psi0`` may be a QuantumState ket, a shape-(100,) vector, or a
    shape-(100, k) stack of vectors propagated simultaneously.  Returns the
    same container kind; with ``t_eval`` an array of sampled states is
    returned alongside as (final, times, samples).
    """
    eps_c, eps_t = _resolve_envelopes(envelopes)
    wrapped = isinstance(psi0, QuantumState)
    y0 = psi0.data if wrapped else np.asarray(psi0, dtype=complex)
    stacked = y0.ndim == 2
    shape = y0.shape

    md = -1j * h.drift_diagonal()
    dc = sparse.csr_matrix(h.drive_control)
    dt_ = sparse.csr_matrix(h.drive_target)

    def rhs(t, y):
        psi = y.reshape(shape) if stacked else y
        dpsi = md[:, None] * psi if stacked else md * psi
        if eps_c is not None:
            ec = eps_c(t)
            if ec != 0.0:
                dpsi = dpsi - 1j * ec * (dc @ psi)
        if eps_t is not None:
            et = eps_t(t)
            if et != 0.0:
                dpsi = dpsi - 1j * et * (dt_ @ psi)
        return dpsi.ravel() if stacked else dpsi

    sol = _solve(rhs, y0.ravel() if stacked else y0, t_span, rtol, atol, t_eval, max_step)
    final = sol.y[:, -1].reshape(shape) if stacked else sol.y[:, -1]
    result = QuantumState.ket(final) if wrapped else final
    if t_eval is not None:
        samples = np.moveaxis(sol.y.reshape(shape + (sol.t.size,)), -1, 0)
        return result, sol.t, samples
    return result


def propagate_lindblad(h: CompositeHamiltonian, envelopes, collapse: CollapseSet,
                       rho0, t_span, rtol: float = RTOL_DEFAULT,
                       atol: float = ATOL_DEFAULT, t_eval=None, max_step=None):
    """Integrate the Lindblad master equation over one segment.

    drho/dt = -i[H, rho] + sum_r (C_r rho C_r^+ - 1/2 {C_r^+ C_r, rho}).
    Trace and Hermiticity are verified after integration and raise
    PropagationError when they drift beyond 1e-8 (integration failure).
    """
    eps_c, eps_t = _resolve_envelopes(envelopes)
    wrapped = isinstance(rho0, QuantumState)
    r0 = rho0.data if wrapped else np.asarray(rho0, dtype=complex)
    if r0.ndim != 2:
        raise ConfigError("propagate_lindblad needs a density matrix")

    d = h.drift_diagonal()
    comm_diag = -1j * (d[:, None] - d[None, :])
    dc = sparse.csr_matrix(h.drive_control)
    dt_ = sparse.csr_matrix(h.drive_target)
    jumps = [(c, c.conj().T.tocsr()) for c in collapse.composite]
    anticomm = sum((cd @ c for c, cd in jumps), sparse.csr_matrix((DIM, DIM))) * 0.5
    anticomm = anticomm.tocsr()

    def rhs(t, y):
        rho = y.reshape(DIM, DIM)
        drho = comm_diag * rho
        if eps_c is not None:
            ec = eps_c(t)
            if ec != 0.0:
                drho = drho - 1j * ec * (dc @ rho - rho @ dc)
        if eps_t is not None:
            et = eps_t(t)
            if et != 0.0:
                drho = drho - 1j * et * (dt_ @ rho - rho @ dt_)
        drho = drho - (anticomm @ rho + rho @ anticomm)
        for c, cd in jumps:
            drho = drho + c @ (rho @ cd)
        return drho.ravel()

    sol = _solve(rhs, r0.ravel(), t_span, rtol, atol, t_eval, max_step)
    rho_f = sol.y[:, -1].reshape(DIM, DIM)
    trace_drift = abs(np.trace(rho_f).real - np.trace(r0).real)
    herm_defect = float(np.max(np.abs(rho_f - rho_f.conj().T)))
    if trace_drift > 1e-8 or herm_defect > 1e-8:
        raise PropagationError(
            f"density matrix degraded: trace drift {trace_drift:.3e}, "
            f"hermiticity defect {herm_defect:.3e}"
        )
    result = QuantumState.density(rho_f) if wrapped else rho_f
    if t_eval is not None:
        samples = np.moveaxis(sol.y.reshape(DIM, DIM, sol.t.size), -1, 0)
        return result, sol.t, samples
    return result


def export_trajectory(path, times, samples, kind: str) -> None:
    """Write t_ns plus per-atom level populations for each sampled state."""
    header = ["t_ns"]
    header += [f"pop_c_{label}" for label in LEVELS]
    header += [f"pop_t_{label}" for label in LEVELS]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, sample in zip(times, samples):
            state = QuantumState(np.asarray(sample), kind)
            pc, pt = reduced_populations(state)
            row = [f"{t:.12g}"] + [f"{p:.12g}" for p in np.concatenate([pc, pt])]
            writer.writerow(row)
