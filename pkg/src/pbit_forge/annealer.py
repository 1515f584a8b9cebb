"""Gibbs sampling through the crossbar/SMTJ chain with a read-voltage ramp."""
from __future__ import annotations

import enum
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .devices import (
    CrossbarArray,
    SmtjDevice,
    mac_current,
    mac_to_vmtj,
    ap_probability,
    smtj_probability,
    spin_drive_voltages,
)
from .errors import ContractError
from .ising import IsingModel, SpinState, energy, flip_gain, sigmoid
from .mapping import CrossbarLowering, check_color_classes


class UpdateMode(enum.Enum):
    HARDWARE = "hw"
    IDEAL = "ideal"


class UpdateOrder(enum.Enum):
    SEQUENTIAL = "sequential"
    SHUFFLED = "shuffled"
    CHROMATIC = "chromatic"


class SmtjAssignment(enum.Enum):
    FIXED = "fixed"
    PER_TRIAL = "per_trial"
    PER_ROW = "per_row"


def effective_beta(v_read: float, v_ref: float) -> float:
    if v_ref <= 0:
        raise ContractError("V_ref must be positive")
    return v_read / v_ref


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear V_read ramp from v_start to v_end, stepped every updates_per_step updates."""

    v_start: float = 0.035
    v_end: float = 0.25
    updates_per_step: int = 50
    total_updates: int = 7200
    v_ref: float = 0.25
    v_max: float = 1.0

    def __post_init__(self):
        if not 0 < self.v_start <= self.v_end <= self.v_max:
            raise ContractError(f"need 0 < V_start <= V_end <= {self.v_max} V")
        if self.updates_per_step < 1:
            raise ContractError("updates_per_step must be >= 1")
        if self.total_updates < self.updates_per_step:
            raise ContractError("total_updates must be >= updates_per_step")
        if self.v_ref <= 0:
            raise ContractError("V_ref must be positive")

    @property
    def n_steps(self) -> int:
        return -(-self.total_updates // self.updates_per_step)

    def v_at(self, iteration: int) -> float:
        k = iteration // self.updates_per_step
        if self.n_steps == 1:
            return self.v_start
        return self.v_start + (self.v_end - self.v_start) * k / (self.n_steps - 1)

    def voltages(self) -> np.ndarray:
        return np.array([self.v_at(t) for t in range(self.total_updates)])

    def beta_at(self, iteration: int) -> float:
        return effective_beta(self.v_at(iteration), self.v_ref)


@dataclass(frozen=True)
class MachineConfig:
    mode: UpdateMode = UpdateMode.HARDWARE
    order: UpdateOrder = UpdateOrder.SEQUENTIAL
    assignment: SmtjAssignment = SmtjAssignment.FIXED
    pulse_width: float | None = 50e-6
    rng_seed: int = 0
    mac_noise: float = 0.0
    snapshot_stride: int = 0


@dataclass(eq=False)
class IsingMachine:
    """A model, optionally lowered onto a crossbar, plus its p-bit devices.

    Without a crossbar only IDEAL mode is available and fields come straight
    from the model; with one, every field is a MAC read of the array.
    """

    model: IsingModel
    config: MachineConfig = field(default_factory=MachineConfig)
    devices: tuple[SmtjDevice, ...] = (SmtjDevice(),)
    crossbar: CrossbarArray | None = None
    lowering: CrossbarLowering | None = None
    g_scale: float = 1.0
    color_classes: list[list[int]] | None = None

    def __post_init__(self):
        if not self.devices:
            raise ContractError("machine needs at least one SMTJ")
        if self.config.mode is UpdateMode.HARDWARE and self.crossbar is None:
            raise ContractError("hardware mode needs a programmed crossbar")
        if self.crossbar is not None:
            if self.lowering is None:
                raise ContractError("a crossbar needs its lowering (polarity, g_scale)")
            self.g_scale = self.lowering.g_scale
            if self.crossbar.shape[0] != self.model.n:
                raise ContractError("crossbar rows must match the spin count")
        if self.config.assignment is SmtjAssignment.PER_ROW and len(self.devices) < self.model.n:
            raise ContractError("per-row assignment needs one SMTJ per spin")
        if self.config.order is UpdateOrder.CHROMATIC:
            if self.color_classes is None:
                raise ContractError("chromatic order needs precomputed color classes")
            check_color_classes(self.model, self.color_classes)
        self._J = self.model.J
        self._h = self.model.h
        self._lo = self.model.domain.low
        self._hi = self.model.domain.high
        self._kra = np.array([d.K * d.r_alpha * 1e-6 for d in map(self.device_for, range(self.model.n))])

    def device_for(self, i: int) -> SmtjDevice:
        if self.config.assignment is SmtjAssignment.PER_ROW:
            return self.devices[i]
        return self.devices[0]

    def beta_hw(self, v_read: float, i: int = 0) -> float:
        """Slope of the composed chain per unit dimensionless field: K * R_alpha * G_scale * V_read."""
        dev = self.device_for(i)
        return dev.K * dev.r_alpha * self.g_scale * 1e-6 * v_read

    def boltzmann_beta(self, v_read: float, i: int = 0) -> float:
        """Inverse temperature of the stationary distribution at fixed V_read (ideal chain)."""
        return self.beta_hw(v_read, i) / flip_gain(self.model.domain)

    def model_field(self, s: np.ndarray, i: int) -> float:
        return float(self._J[i] @ s + self._h[i])

    def mac_read(self, state: SpinState, rows, v_read: float, rng) -> np.ndarray:
        low = self.lowering
        drive = spin_drive_voltages(state, low.column_polarity, v_read, low.bias_polarity)
        return mac_current(self.crossbar, drive, self.config.mac_noise, rng, rows=rows)

    def high_probability(self, state: SpinState, i: int, v_read: float) -> float:
        """Analytic P(s_i high) for the configured mode, saturating pulse, no read noise."""
        dev = self.device_for(i)
        if self.crossbar is None:
            return float(sigmoid(self.beta_hw(v_read, i) * self.model_field(state.values, i)))
        low = self.lowering
        drive = spin_drive_voltages(state, low.column_polarity, v_read, low.bias_polarity)
        i_mac = float(mac_current(self.crossbar, drive, rows=i)[0])
        if self.config.mode is UpdateMode.IDEAL:
            return float(sigmoid(dev.K * dev.r_alpha * 1e-6 * i_mac))
        v, _ = mac_to_vmtj(i_mac, dev)
        return float(smtj_probability(dev, v))

    def _decide(self, i: int, i_mac: float | None, f_model: float, v_read: float, u: float, rng) -> tuple[int, bool]:
        """New value of spin i given its uniform draw u; returns (value, clamped)."""
        if i_mac is None:
            p = sigmoid(self._kra[i] * self.g_scale * v_read * f_model)
        elif self.config.mode is UpdateMode.IDEAL:
            p = sigmoid(self._kra[i] * i_mac)
        else:
            dev = self.device_for(i)
            v, clamped = mac_to_vmtj(i_mac, dev)
            p = ap_probability(dev, v, self.config.pulse_width)
            r = dev.r_ap if u < p else dev.r_p
            if dev.read_noise_ohm > 0:
                r += rng.normal(0.0, dev.read_noise_ohm)
            return (self._hi if r > dev.r_mean else self._lo), clamped
        return (self._hi if u < p else self._lo), False


def gibbs_step(machine: IsingMachine, state: SpinState, i: int, v_read: float, rng) -> SpinState:
    """One single-site update of spin i at read voltage v_read."""
    if not 0 <= i < machine.model.n:
        raise IndexError(f"spin index {i} out of range")
    s = state.values.astype(np.float64)
    i_mac = None
    if machine.crossbar is not None:
        i_mac = float(machine.mac_read(state, i, v_read, rng)[0])
    new, _ = machine._decide(i, i_mac, machine.model_field(s, i), v_read, rng.random(), rng)
    out = state.values.copy()
    out[i] = new
    return SpinState(out, state.domain)


def chromatic_sweep(machine: IsingMachine, state: SpinState, color_classes, v_read: float, rng) -> SpinState:
    """Update each color class in turn, all members from the pre-class state."""
    check_color_classes(machine.model, color_classes)
    s = state.values.copy()
    for cls in color_classes:
        s, _, _ = _update_class(machine, s, np.asarray(cls, dtype=np.intp), v_read, rng)
    return SpinState(s, state.domain)


def _update_class(machine: IsingMachine, s: np.ndarray, cls: np.ndarray, v_read: float, rng):
    """Returns (new values, model-energy change, clamp count)."""
    f_model = machine._J[cls] @ s + machine._h[cls]
    # one uniform per member, drawn as a block: the outcome does not depend on
    # the order in which members are evaluated
    u = rng.random(len(cls))
    out = s.copy()
    clamps = 0
    if machine.crossbar is None:
        p = sigmoid(machine._kra[cls] * machine.g_scale * v_read * f_model)
        out[cls] = np.where(u < p, machine._hi, machine._lo)
    else:
        i_mac = machine.mac_read(SpinState(s, machine.model.domain), cls, v_read, rng)
        if machine.config.mode is UpdateMode.IDEAL:
            p = sigmoid(machine._kra[cls] * i_mac)
            out[cls] = np.where(u < p, machine._hi, machine._lo)
        else:
            for k, i in enumerate(cls.tolist()):
                out[i], clamped = machine._decide(i, float(i_mac[k]), float(f_model[k]), v_read, u[k], rng)
                clamps += clamped
    delta = -float(np.dot(out[cls] - s[cls], f_model))
    return out, delta, clamps


@dataclass(eq=False)
class RunTrace:
    iteration: np.ndarray
    v_read: np.ndarray
    flipped: list  # int (sequential: changed spin or -1) or tuple of changed spins (chromatic)
    energy: np.ndarray
    snapshots: list[tuple[int, np.ndarray]]
    initial_state: SpinState
    final_state: SpinState
    seed: int
    clamp_events: int = 0
    duration_s: float = 0.0
    state_codes: np.ndarray | None = None

    @property
    def final_energy(self) -> float:
        return float(self.energy[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iteration,v_read_mV,flipped_index,energy\n")
        for it, v, fl, e in zip(self.iteration.tolist(), self.v_read.tolist(), self.flipped, self.energy.tolist()):
            if isinstance(fl, tuple):
                fl = ";".join(map(str, fl)) if fl else "-1"
            buf.write(f"{it},{v * 1e3:.5e},{fl},{e:.5e}\n")
        return buf.getvalue()


def run_annealing(
    machine: IsingMachine,
    schedule: AnnealSchedule,
    init: SpinState | None = None,
    rng: np.random.Generator | None = None,
    record_codes: bool = False,
) -> RunTrace:
    """Anneal by ramping V_read; one record per single-site (or color-class) update.

    In chromatic order the schedule counts class updates rather than single
    spin updates.
    """
    t0 = time.perf_counter()
    model = machine.model
    cfg = machine.config
    n = model.n
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    if init is None:
        init = SpinState.random(n, model.domain, rng)
    elif init.domain is not model.domain or len(init) != n:
        raise ContractError("initial state does not match the model")

    total = schedule.total_updates
    s = init.values.copy()
    e = energy(model, init)
    its = np.arange(total, dtype=np.int64)
    volts = np.empty(total)
    energies_out = np.empty(total)
    flipped: list = [None] * total
    snaps: list[tuple[int, np.ndarray]] = []
    codes = np.empty(total, dtype=np.int64) if record_codes else None
    code = init.index()
    stride = cfg.snapshot_stride
    clamps = 0
    hw = machine.crossbar is not None
    J, h = machine._J, machine._h
    order = np.arange(n)
    classes = [np.asarray(c, dtype=np.intp) for c in machine.color_classes or ()]

    for t in range(total):
        v = schedule.v_at(t)
        volts[t] = v
        if cfg.order is UpdateOrder.CHROMATIC:
            cls = classes[t % len(classes)]
            new_s, delta, c = _update_class(machine, s, cls, v, rng)
            changed = tuple(cls[new_s[cls] != s[cls]].tolist())
            for i in changed:
                code ^= 1 << i
            s = new_s
            e += delta
            clamps += c
            flipped[t] = changed
        else:
            pos = t % n
            if pos == 0 and cfg.order is UpdateOrder.SHUFFLED:
                order = rng.permutation(n)
            i = int(order[pos])
            f = float(J[i] @ s + h[i])
            i_mac = float(machine.mac_read(SpinState(s, model.domain), i, v, rng)[0]) if hw else None
            new, clamped = machine._decide(i, i_mac, f, v, rng.random(), rng)
            clamps += clamped
            if new != s[i]:
                e -= (new - s[i]) * f
                s[i] = new
                code ^= 1 << i
                flipped[t] = i
            else:
                flipped[t] = -1
        energies_out[t] = e
        if record_codes:
            codes[t] = code
        if stride and (t + 1) % stride == 0:
            snaps.append((t, s.copy()))

    final = SpinState(s, model.domain)
    if not snaps or snaps[-1][0] != total - 1:
        snaps.append((total - 1, s.copy()))
    # the running energy is incremental; pin the last record to a fresh evaluation
    exact = energy(model, final)
    if not math.isclose(exact, e, rel_tol=0, abs_tol=1e-9):
        raise AssertionError(f"incremental energy drifted: {e} vs {exact}")
    energies_out[-1] = exact
    return RunTrace(
        iteration=its,
        v_read=volts,
        flipped=flipped,
        energy=energies_out,
        snapshots=snaps,
        initial_state=init,
        final_state=final,
        seed=cfg.rng_seed,
        clamp_events=clamps,
        duration_s=time.perf_counter() - t0,
        state_codes=codes,
    )


def state_histogram(trace: RunTrace, n: int, burn_in: int = 0) -> np.ndarray:
    """Empirical distribution over the 2^n state codes visited after burn-in."""
    if trace.state_codes is None:
        raise ContractError("run with record_codes=True to histogram states")
    counts = np.bincount(trace.state_codes[burn_in:], minlength=1 << n)
    return counts / counts.sum()
