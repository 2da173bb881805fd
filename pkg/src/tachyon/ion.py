"""Trapped-ion realisation: spinor x truncated Fock space.

The spin is the qubit |up>, |down>; the motion is one trap mode with
x = a + a^dag and p = i (a^dag - a) / 2 in units of the ground-state size
Delta.  Two counter-propagating beams, detuned by +nu + delta and
-nu + delta and carrying Lamb-Dicke factors -eta and +eta, each drive

    H_j = i Om (s- e^{i d_j t} - s+ e^{-i d_j t}) [sin phi + eta_j cos phi (a e^{-i nu t} + a^dag e^{i nu t})].

With sin phi = 0 and delta = 0 the resonant part of the sum is 2 eta Om p sx,
so c = 2 eta Delta Om and the natural time unit is Delta / c = 1 / (2 eta Om).
A common detuning delta adds -(delta / 2) sz in the frame rotating with
exp(-i delta t sz / 2), i.e. a normal mass m c^2 = -delta / 2.  Optical
pumping of |up> at rate gamma adds -i (gamma / 2) |up><up|; post-selected on
no decay the motion follows the tachyon equation with m c^2 = gamma / 4.

Everything is integrated in natural units; :class:`IonParams` holds SI input.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants, sparse

from .core import ObservableRecord, ObservableSeries, SpinorField
from .errors import ConfigurationError, ProtocolRegimeError, StabilityError, StatisticsError, TruncationError
from .params import DiracParams, MassType, NaturalUnits

TRUNCATION_TOL = 1e-6
LAMB_DICKE_LIMIT = 0.2
STEPS_PER_TRAP_PERIOD = 200
REGIME_LIMIT = 0.25
PUMPING_ERROR_RATIO = 0.002

DECAY = "decay"
PUMPING = "pumping"


class LambDickeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IonParams:
    """Laser, trap and dissipation parameters in SI (angular frequencies in rad/s).

    ``gamma_d`` defaults to 0.002 gamma.  ``readout_fidelity`` is the
    probability that a decayed run is recognised as such.
    """

    eta: float = 0.05
    omega_tilde: float = 2 * math.pi * 100e3
    nu: float = 2 * math.pi * 1e6
    delta: float = 0.0
    phi: float = 0.0
    gamma: float = 2 * math.pi * 80e3
    gamma_d: float | None = None
    delta_x: float = 3.4e-9
    n_max: int = 128
    readout_fidelity: float = 1.0

    def __post_init__(self):
        if self.gamma_d is None:
            object.__setattr__(self, "gamma_d", PUMPING_ERROR_RATIO * self.gamma)
        for name in ("eta", "omega_tilde", "nu", "delta_x"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.gamma < 0 or self.gamma_d < 0:
            raise ConfigurationError("gamma and gamma_d must be >= 0")
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 4:
            raise ConfigurationError(f"n_max must be an integer >= 4, got {self.n_max}")
        if not 0 <= self.readout_fidelity <= 1:
            raise ConfigurationError(f"readout_fidelity must lie in [0, 1], got {self.readout_fidelity}")
        if self.eta > LAMB_DICKE_LIMIT:
            warnings.warn(f"eta={self.eta} is outside the Lamb-Dicke regime", LambDickeWarning, stacklevel=3)

    @property
    def speed_of_light(self) -> float:
        """c = 2 eta Delta Omega_tilde in m/s."""
        return 2 * self.eta * self.delta_x * self.omega_tilde

    @property
    def time_unit(self) -> float:
        """Delta / c in seconds."""
        return 1.0 / (2 * self.eta * self.omega_tilde)

    @property
    def units(self) -> NaturalUnits:
        return NaturalUnits(self.delta_x, self.time_unit)

    def natural(self, name: str) -> float:
        """A rate from this parameter set in units of c / Delta."""
        return getattr(self, name) * self.time_unit

    def with_(self, **changes) -> "IonParams":
        if "gamma" in changes and "gamma_d" not in changes:
            changes["gamma_d"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class IonMapping:
    dirac: DiracParams
    speed_of_light: float
    rest_energy: float
    mass_kg: float
    m_prime: float
    time_unit: float


def ideal_mapping(params: IonParams, mass_source: str = "decay") -> IonMapping:
    """Effective Dirac parameters realised by ``params``.

    ``mass_source='decay'`` gives a tachyon with m c^2 = gamma / 4,
    ``'detuning'`` a normal particle with m c^2 = |delta| / 2.
    ``rest_energy`` is an angular frequency; ``mass_kg`` uses hbar.
    """
    if mass_source == "decay":
        rest, kind = params.gamma / 4, MassType.TACHYON
    elif mass_source == "detuning":
        rest, kind = abs(params.delta) / 2, MassType.NORMAL
    else:
        raise ConfigurationError(f"mass_source must be 'decay' or 'detuning', got {mass_source!r}")
    c = params.speed_of_light
    m_prime = params.units.mass_prime(rest)
    return IonMapping(
        dirac=DiracParams(mass=m_prime, mass_type=kind),
        speed_of_light=c,
        rest_energy=rest,
        mass_kg=constants.hbar * rest / c**2,
        m_prime=m_prime,
        time_unit=params.time_unit,
    )


def detuning_for_mass(params: IonParams, m_prime: float) -> float:
    """SI detuning delta that realises a normal mass m' (delta = -2 m c^2)."""
    return -2 * m_prime / params.time_unit


class _Couplings:
    """Time-dependent coefficients of H = s+ B(t) + s- B(t)^dag,  B = b0 + ba a + bad a^dag."""

    def __init__(self, params: IonParams, beams: str = "pair"):
        tu = params.time_unit
        om, nu, dl, eta = params.omega_tilde * tu, params.nu * tu, params.delta * tu, params.eta
        if beams == "pair":
            self.beams = [(nu + dl, -eta), (-nu + dl, eta)]
        elif beams == "single":
            self.beams = [(dl, eta)]
        else:
            raise ConfigurationError(f"beams must be 'pair' or 'single', got {beams!r}")
        self.om, self.nu = om, nu
        self.s, self.cphi = math.sin(params.phi), math.cos(params.phi)
        self.delta = dl

    def at(self, t: float) -> tuple[complex, complex, complex]:
        b0 = ba = bad = 0j
        for d, eta in self.beams:
            f = -1j * self.om * complex(math.cos(d * t), -math.sin(d * t))
            b0 += f * self.s
            ba += f * eta * self.cphi * complex(math.cos(self.nu * t), -math.sin(self.nu * t))
            bad += f * eta * self.cphi * complex(math.cos(self.nu * t), math.sin(self.nu * t))
        return b0, ba, bad


def _ladder(n_max: int) -> np.ndarray:
    return np.sqrt(np.arange(1, n_max + 1, dtype=float))


def _lower(v: np.ndarray, s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    out[..., :-1] = s * v[..., 1:]
    return out


def _raise(v: np.ndarray, s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    out[..., 1:] = s * v[..., :-1]
    return out


def _apply(psi: np.ndarray, coeffs, s: np.ndarray) -> np.ndarray:
    b0, ba, bad = coeffs
    up, down = psi[..., 0, :], psi[..., 1, :]
    out = np.empty_like(psi)
    out[..., 0, :] = b0 * down + ba * _lower(down, s) + bad * _raise(down, s)
    out[..., 1, :] = np.conj(b0) * up + np.conj(ba) * _raise(up, s) + np.conj(bad) * _lower(up, s)
    return out


def apply_sideband(psi: np.ndarray, t: float, params: IonParams, beams: str = "pair") -> np.ndarray:
    """H_o(t) applied to amplitudes of shape (..., 2, n_max + 1); t in units of Delta / c."""
    return _apply(np.asarray(psi, dtype=complex), _Couplings(params, beams).at(t), _ladder(params.n_max))


def sideband_hamiltonian(t: float, params: IonParams, beams: str = "pair") -> sparse.csr_matrix:
    """Sparse matrix of H_o(t) on the flattened (spin, Fock) basis, in units of c / Delta.

    Built from Kronecker products of the ladder matrices; slower than
    :func:`apply_sideband` but independent of it.
    """
    b0, ba, bad = _Couplings(params, beams).at(t)
    dim = params.n_max + 1
    a = sparse.diags(_ladder(params.n_max), 1, shape=(dim, dim), dtype=complex)
    ident = sparse.identity(dim, dtype=complex)
    b = b0 * ident + ba * a + bad * a.T
    splus = sparse.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    return (sparse.kron(splus, b) + sparse.kron(splus.T, b.conj().T)).tocsr()


@dataclass(frozen=True)
class IonState:
    """Amplitudes of shape (2, n_max + 1), row 0 for |up>."""

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != 2:
            raise ConfigurationError(f"expected amplitudes of shape (2, n_max + 1), got {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[1] - 1

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def normalized(self) -> "IonState":
        return IonState(self.amplitudes / math.sqrt(self.norm_sq), self.time)

    def fock_populations(self) -> np.ndarray:
        p = np.sum(np.abs(self.amplitudes) ** 2, axis=0)
        return p / p.sum()

    def truncation_weight(self) -> float:
        return float(self.fock_populations()[-2:].sum())

    def observables(self) -> ObservableRecord:
        return _observables(self.amplitudes[None], np.array([self.time]))[0]

    def rotated(self, rotation: np.ndarray) -> "IonState":
        return IonState(np.asarray(rotation) @ self.amplitudes, self.time)


def _moments(psi: np.ndarray) -> dict:
    """Raw (unnormalised) second-quantised moments for a batch (P, 2, n+1)."""
    s = _ladder(psi.shape[-1] - 1)
    lower = np.sum(np.conj(psi[..., :-1]) * s * psi[..., 1:], axis=-1)  # <a> per spin
    dens = np.sum(np.abs(psi) ** 2, axis=-1)
    cross = np.sum(np.conj(psi[..., 0, :]) * psi[..., 1, :], axis=-1)
    return {
        "norm": dens.sum(axis=-1),
        "x": 2 * lower.real.sum(axis=-1),
        "p": lower.imag.sum(axis=-1),
        "xsz": 2 * (lower[..., 0].real - lower[..., 1].real),
        "sx": 2 * cross.real,
        "sy": 2 * cross.imag,
        "sz": dens[..., 0] - dens[..., 1],
    }


def _observables(psi: np.ndarray, times) -> list[ObservableRecord]:
    m = _moments(psi)
    out = []
    for i, t in enumerate(np.broadcast_to(times, m["norm"].shape)):
        n = m["norm"][i]
        x, sz = m["x"][i] / n, m["sz"][i] / n
        out.append(
            ObservableRecord(
                time=float(t),
                mean_x=float(x),
                mean_p=float(m["p"][i] / n),
                mean_sigma_x=float(m["sx"][i] / n),
                mean_sigma_y=float(m["sy"][i] / n),
                mean_sigma_z=float(sz),
                correlation_xz=float(m["xsz"][i] / n - x * sz),
                norm_sq=float(n),
            )
        )
    return out


def _truncation(psi: np.ndarray) -> np.ndarray:
    pops = np.sum(np.abs(psi) ** 2, axis=-2)
    return pops[..., -2:].sum(axis=-1) / pops.sum(axis=-1)


def coherent_state(alpha: complex, spinor, n_max: int) -> IonState:
    """spinor (x) |alpha>, truncated at n_max; raises if the cut loses > 1e-6."""
    spinor = np.asarray(spinor, dtype=complex)
    if spinor.shape != (2,) or not np.isclose(np.linalg.norm(spinor), 1.0, atol=1e-10):
        raise ConfigurationError("spinor must be a normalised 2-vector")
    c = np.empty(n_max + 1, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, n_max + 1):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    lost = 1 - float(np.sum(np.abs(c) ** 2))
    if lost > TRUNCATION_TOL or np.sum(np.abs(c[-2:]) ** 2) > TRUNCATION_TOL:
        raise TruncationError(f"coherent state |alpha|^2={abs(alpha)**2:.3g} does not fit n_max={n_max}")
    return IonState(spinor[:, None] * c[None, :])


def hermite_functions(x: np.ndarray, n_max: int) -> np.ndarray:
    """Fock wavefunctions <x|n> for x = a + a^dag, shape (n_max + 1, len(x))."""
    xi = np.asarray(x, dtype=float) / math.sqrt(2)
    h = np.empty((n_max + 1, xi.size))
    h[0] = np.pi**-0.25 * np.exp(-(xi**2) / 2)
    if n_max >= 1:
        h[1] = math.sqrt(2) * xi * h[0]
    for n in range(1, n_max):
        h[n + 1] = math.sqrt(2 / (n + 1)) * xi * h[n] - math.sqrt(n / (n + 1)) * h[n - 1]
    return h / 2**0.25


def fock_from_field(field: SpinorField, n_max: int, tol: float = TRUNCATION_TOL) -> IonState:
    """Project a grid wavefunction onto the first n_max + 1 Fock states."""
    psi = field.normalized().psi
    basis = hermite_functions(field.grid.x, n_max)
    amps = psi @ basis.T * field.grid.dx
    lost = 1 - float(np.sum(np.abs(amps) ** 2))
    if lost > tol or _truncation(amps[None])[0] > tol:
        raise TruncationError(f"field loses {lost:.3g} of its weight in {n_max + 1} Fock states")
    return IonState(amps)


def coherent_initial_state(p_o: float, dirac: DiracParams, n_max: int) -> IonState:
    """Coherent state alpha = i p_o times the + branch spinor u_+(p_o)."""
    from .analytic import eigenspinor

    return coherent_state(1j * p_o, eigenspinor(p_o, dirac, +1), n_max)


def default_dt(params: IonParams) -> float:
    """Largest step allowed, 2 pi / (200 nu), in units of Delta / c."""
    return 2 * math.pi / (STEPS_PER_TRAP_PERIOD * params.natural("nu"))


class _Integrator:
    """Fixed-step RK4 for i d/dt psi = (H_o(t) - i (rate / 2) |up><up|) psi on batches."""

    def __init__(self, params: IonParams, rate: float, dt: float | None, t_final: float, beams: str):
        limit = default_dt(params)
        dt = limit if dt is None else dt
        if not dt > 0 or dt > limit * (1 + 1e-9):
            raise StabilityError(f"dt={dt:.4g} exceeds 2 pi / (200 nu) = {limit:.4g} (units of Delta/c)")
        if t_final < 0:
            raise ConfigurationError("t_final must be >= 0")
        self.n_steps = max(1, math.ceil(t_final / dt - 1e-9))
        self.dt = t_final / self.n_steps if t_final > 0 else 0.0
        self.couplings = _Couplings(params, beams)
        self.s = _ladder(params.n_max)
        self.rate = rate

    def rhs(self, psi, t):
        out = -1j * _apply(psi, self.couplings.at(t), self.s)
        out[..., 0, :] -= 0.5 * self.rate * psi[..., 0, :]
        return out

    def step(self, psi, t):
        h = self.dt
        k1 = self.rhs(psi, t)
        k2 = self.rhs(psi + 0.5 * h * k1, t + 0.5 * h)
        k3 = self.rhs(psi + 0.5 * h * k2, t + 0.5 * h)
        k4 = self.rhs(psi + h * k3, t + h)
        return psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    def to_dirac_frame(self, psi, t):
        """Undo the delta / 2 spin rotation so a detuning shows up as a static mass."""
        if self.couplings.delta == 0:
            return psi
        phase = np.array([np.exp(0.5j * self.couplings.delta * t), np.exp(-0.5j * self.couplings.delta * t)])
        return psi * phase[:, None]


def _sample_stride(dt: float, interval: float) -> int:
    return max(1, int(round(interval / dt))) if dt > 0 else 1


@dataclass
class ConditionedRun:
    state: IonState
    success_probability: float
    series: ObservableSeries
    max_truncation: float
    dt: float


def evolve_conditioned(
    state: IonState,
    params: IonParams,
    t_final: float,
    dt: float | None = None,
    sample_interval: float = 0.01,
    beams: str = "pair",
) -> ConditionedRun:
    """No-decay evolution under H_o(t) - i (gamma / 2) |up><up|.

    ``t_final``, ``dt`` and ``sample_interval`` are in units of Delta / c.
    The success probability is the final raw squared norm; observables are on
    the renormalised state in the frame where a detuning is a static mass.

    Raises
    ------
    TruncationError
        If the top two Fock levels ever hold more than 1e-6 at a sample.
    StabilityError
        If dt exceeds 2 pi / (200 nu).
    """
    if state.n_max != params.n_max:
        raise ConfigurationError(f"state has n_max={state.n_max}, params.n_max={params.n_max}")
    if not np.isclose(state.norm_sq, 1.0, atol=1e-9):
        raise ConfigurationError("initial state must be normalised")
    integ = _Integrator(params, params.natural("gamma"), dt, t_final, beams)
    stride = _sample_stride(integ.dt, sample_interval)
    psi = np.array(state.amplitudes)[None]
    t0 = state.time
    records, worst = [], 0.0
    for n in range(integ.n_steps + 1):
        t = t0 + n * integ.dt
        if n % stride == 0 or n == integ.n_steps:
            trunc = float(_truncation(psi)[0])
            worst = max(worst, trunc)
            if trunc > TRUNCATION_TOL:
                raise TruncationError(f"top-two Fock population {trunc:.3g} at t={t:.4g} (n_max={params.n_max})")
            records.extend(_observables(integ.to_dirac_frame(psi, t - t0), np.array([t])))
        if n < integ.n_steps:
            psi = integ.step(psi, t - t0)
    final = IonState(integ.to_dirac_frame(psi[0], integ.n_steps * integ.dt), t0 + integ.n_steps * integ.dt)
    return ConditionedRun(final, final.norm_sq, ObservableSeries.from_records(records), worst, integ.dt)


def sigma_z_form_norm_sq(success_probability, t, gamma):
    """Squared norm under H_o - i (gamma / 4) sz instead of the full projector.

    The two generators differ by the constant -i gamma / 4, so amplitudes differ
    by exp(-gamma t / 4) and squared norms by exp(-gamma t / 2).
    """
    return np.asarray(success_probability) * np.exp(0.5 * np.asarray(gamma) * np.asarray(t))


def spinor_alignment(state: IonState, reference: ObservableRecord, tol: float = 1e-9) -> np.ndarray:
    """z rotation that turns the transverse spin of ``state`` into that of ``reference``.

    Rotations about z leave the mass term and sz untouched; they account for
    which transverse Pauli matrix the lasers couple to p.
    """
    rec = state.observables()
    ion = complex(rec.mean_sigma_x, rec.mean_sigma_y)
    ref = complex(reference.mean_sigma_x, reference.mean_sigma_y)
    if abs(ion) < tol or abs(ref) < tol:
        return np.eye(2, dtype=complex)
    theta = np.angle(ref) - np.angle(ion)
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


@dataclass
class TrajectoryEnsemble:
    """Quantum-jump ensemble with decay (terminal) and pumping-error channels.

    ``series`` averages over heralded trajectories: those without a decay
    plus decayed ones misread as no-decay.  Its ``norm_sq`` column holds the
    heralded fraction.
    """

    n_total: int
    n_no_jump: int
    n_heralded: int
    jump_trajectory: np.ndarray
    jump_times: np.ndarray
    jump_channels: np.ndarray
    series: ObservableSeries
    master_seed: int
    misread: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def no_jump_fraction(self) -> float:
        return self.n_no_jump / self.n_total

    def binomial_sigma(self, p: float) -> float:
        return math.sqrt(p * (1 - p) / self.n_total)


def run_trajectories(
    params: IonParams,
    initial: IonState,
    t_final: float,
    n_traj: int,
    master_seed: int,
    dt: float | None = None,
    sample_interval: float = 0.01,
    beams: str = "pair",
) -> TrajectoryEnsemble:
    """Monte Carlo wavefunction unravelling with the waiting-time method.

    Every trajectory evolves under H_o - i ((gamma + gamma_d) / 2) |up><up|
    and jumps when its squared norm falls below a uniform threshold drawn
    from its own generator (seeded from ``master_seed`` and its index).  Both
    channels jump from |up>, so the channel is decay with probability
    gamma / (gamma + gamma_d).  Decay ends the trajectory, keeping its motional
    state <up|psi> for readout-error bookkeeping; a pumping error projects
    onto |up> and continues.

    Trajectories that have not jumped share one state, so only distinct
    histories are integrated.  All per-path work is elementwise, hence the
    result depends only on (params, initial, master_seed).
    """
    if n_traj < 1:
        raise ConfigurationError("n_traj must be >= 1")
    if initial.n_max != params.n_max:
        raise ConfigurationError(f"state has n_max={initial.n_max}, params.n_max={params.n_max}")
    gamma, gamma_d = params.natural("gamma"), params.natural("gamma_d")
    total_rate = gamma + gamma_d
    p_decay = gamma / total_rate if total_rate > 0 else 1.0
    integ = _Integrator(params, total_rate, dt, t_final, beams)
    stride = _sample_stride(integ.dt, sample_interval)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(master_seed).spawn(n_traj)]

    threshold = np.array([r.random() for r in rngs])
    path_of = np.zeros(n_traj, dtype=int)  # -1 once decayed
    paths = np.array(initial.normalized().amplitudes)[None]
    frozen_x = np.zeros(n_traj)
    frozen_p = np.zeros(n_traj)
    misread = np.zeros(n_traj, dtype=bool)
    jumps_i, jumps_t, jumps_c = [], [], []
    records = []

    for n in range(integ.n_steps + 1):
        t = n * integ.dt
        if n > 0:
            paths = integ.step(paths, t - integ.dt)
            norms = np.sum(np.abs(paths) ** 2, axis=(-2, -1))
            alive = np.flatnonzero(path_of >= 0)
            jumped = alive[threshold[alive] > norms[path_of[alive]]]
            new_paths = []
            for i in jumped:
                rng, src = rngs[i], path_of[i]
                up = paths[src, 0] / math.sqrt(norms[src])
                if rng.random() < p_decay:
                    w = float(np.sum(np.abs(up) ** 2))
                    mom = _moments(np.stack([up, np.zeros_like(up)])[None])
                    frozen_x[i] = mom["x"][0] / w if w > 0 else 0.0
                    frozen_p[i] = mom["p"][0] / w if w > 0 else 0.0
                    misread[i] = rng.random() >= params.readout_fidelity
                    path_of[i] = -1
                    jumps_c.append(DECAY)
                else:
                    proj = np.stack([up, np.zeros_like(up)])
                    new_paths.append(proj / math.sqrt(np.sum(np.abs(proj) ** 2)))
                    path_of[i] = paths.shape[0] + len(new_paths) - 1
                    threshold[i] = rng.random()
                    jumps_c.append(PUMPING)
                jumps_i.append(int(i))
                jumps_t.append(t)
            if new_paths:
                paths = np.concatenate([paths, np.array(new_paths)])
            if len(jumped):
                # drop histories nobody follows any more
                used = np.unique(path_of[path_of >= 0])
                if used.size < paths.shape[0]:
                    remap = -np.ones(paths.shape[0], dtype=int)
                    remap[used] = np.arange(used.size)
                    paths = paths[used]
                    path_of = np.where(path_of >= 0, remap[np.maximum(path_of, 0)], -1)
        if n % stride == 0 or n == integ.n_steps:
            if paths.shape[0]:
                trunc = _truncation(paths).max()
                if trunc > TRUNCATION_TOL:
                    raise TruncationError(f"top-two Fock population {trunc:.3g} at t={t:.4g} (n_max={params.n_max})")
            records.append(_ensemble_record(integ.to_dirac_frame(paths, t), path_of, misread, frozen_x, frozen_p, t, n_traj))

    n_alive = int(np.sum(path_of >= 0))
    n_heralded = n_alive + int(misread.sum())
    if n_heralded == 0:
        raise StatisticsError(f"no heralded trajectories out of {n_traj} at t={t_final}")
    return TrajectoryEnsemble(
        n_total=n_traj,
        n_no_jump=n_alive,
        n_heralded=n_heralded,
        jump_trajectory=np.array(jumps_i, dtype=int),
        jump_times=np.array(jumps_t, dtype=float),
        jump_channels=np.array(jumps_c, dtype=object),
        series=ObservableSeries.from_records(records),
        master_seed=master_seed,
        misread=misread,
    )


def _ensemble_record(paths, path_of, misread, frozen_x, frozen_p, t, n_traj) -> ObservableRecord:
    weights = np.bincount(path_of[path_of >= 0], minlength=paths.shape[0]).astype(float)
    n_bad = int(misread.sum())
    count = weights.sum() + n_bad
    if count == 0:
        nan = float("nan")
        return ObservableRecord(t, nan, nan, nan, nan, nan, nan, 0.0)
    m = _moments(paths)
    norm = m["norm"]
    mean = {k: (np.dot(weights, m[k] / norm)) for k in ("x", "p", "xsz", "sx", "sy", "sz")}
    # misread decays sit in |a>: motion counts, spin expectation values are zero
    mean["x"] += frozen_x[misread].sum()
    mean["p"] += frozen_p[misread].sum()
    mean = {k: v / count for k, v in mean.items()}
    return ObservableRecord(
        time=float(t),
        mean_x=float(mean["x"]),
        mean_p=float(mean["p"]),
        mean_sigma_x=float(mean["sx"]),
        mean_sigma_y=float(mean["sy"]),
        mean_sigma_z=float(mean["sz"]),
        correlation_xz=float(mean["xsz"] - mean["x"] * mean["sz"]),
        norm_sq=float(count / n_traj),
    )


_V_SY_TO_SZ = (np.eye(2) + 1j * np.array([[0, 1], [1, 0]])) / math.sqrt(2)


@dataclass(frozen=True)
class ProtocolResult:
    k_values: np.ndarray
    sigma_z: np.ndarray
    slope: float
    x_sigma_z: float
    mean_x: float
    mean_sigma_z: float

    @property
    def correlation(self) -> float:
        """Connected part <x sz> - <x><sz>."""
        return self.x_sigma_z - self.mean_x * self.mean_sigma_z


def displace(state: IonState, k: float) -> IonState:
    """Apply U = exp(-i k x sx) with x = a + a^dag on the truncated space."""
    n = state.n_max
    s = _ladder(n)
    xmat = np.diag(s, 1) + np.diag(s, -1)
    vals, vecs = np.linalg.eigh(xmat)
    amps = state.amplitudes
    plus = (amps[0] + amps[1]) / math.sqrt(2)
    minus = (amps[0] - amps[1]) / math.sqrt(2)
    plus = vecs @ (np.exp(-1j * k * vals) * (vecs.T @ plus))
    minus = vecs @ (np.exp(1j * k * vals) * (vecs.T @ minus))
    return IonState(np.stack([plus + minus, plus - minus]) / math.sqrt(2), state.time)


def _protocol_curve(state: IonState, k: np.ndarray) -> np.ndarray:
    rotated = state.rotated(_V_SY_TO_SZ)
    return np.array([displace(rotated, kk).observables().mean_sigma_z for kk in k])


def measure_correlation_protocol(state: IonState, k_values) -> ProtocolResult:
    """Estimate <x sz> from <sz> after state-dependent displacements.

    The spinor is first rotated with V = exp(i pi sx / 4), which maps the
    sy readout onto sz of the original state.  For each k, U = exp(-i k x sx)
    turns sz into cos(2 k x) sz + sin(2 k x) sy, so the k -> 0 slope of <sz>
    is 2 <x sy> of the rotated state.  The slope comes from a straight-line
    least-squares fit; with k values symmetric about zero its error is O(k^2).

    <x> is measured the same way after resetting the spin to |up> (a
    mixture over the original spin components), so the O(k^2) bias of the
    two estimates cancels in the connected correlation of a product state.
    <sz> is read off directly.

    Raises
    ------
    ProtocolRegimeError
        If max |k| * sqrt(<x^2>) exceeds 0.25, where the linearisation fails.
    """
    k = np.asarray(k_values, dtype=float)
    if k.ndim != 1 or np.unique(k).size < 2:
        raise ConfigurationError("need at least two distinct k values")
    state = state.normalized()
    s = _ladder(state.n_max)
    xpsi = _lower(state.amplitudes, s) + _raise(state.amplitudes, s)
    x_rms = math.sqrt(float(np.sum(np.abs(xpsi) ** 2)))
    if np.max(np.abs(k)) * x_rms > REGIME_LIMIT:
        raise ProtocolRegimeError(
            f"max|k| * sqrt(<x^2>) = {np.max(np.abs(k)) * x_rms:.3g} exceeds {REGIME_LIMIT}; use smaller k"
        )
    sz = _protocol_curve(state, k)
    slope = float(np.polyfit(k, sz, 1)[0])
    reset = np.zeros_like(sz)
    for motion in state.amplitudes:
        w = float(np.sum(np.abs(motion) ** 2))
        if w > 0:
            up = IonState(np.stack([motion, np.zeros_like(motion)]) / math.sqrt(w))
            reset += w * _protocol_curve(up, k)
    x = 0.5 * float(np.polyfit(k, reset, 1)[0])
    return ProtocolResult(k, sz, slope, 0.5 * slope, x, state.observables().mean_sigma_z)
