"""Deterministic rigid-body dynamics for capsule limbs.

Position-based dynamics: semi-implicit Euler integration, then iterative
projection of ball-joint and terrain-contact constraints, then velocity
recovery from position deltas plus a Coulomb friction pass.

Conventions fixed here and relied on by sensing and control:
  * limb axis is body z; the motorized parent-end is the +z tip, the free
    child-end the -z tip;
  * quaternions (w, x, y, z), world up is +y, gravity acts along -y;
  * actuation torques are expressed in the limb's body frame and act between
    the limb and the world (neighbors feel them only through joints).

State is stored structure-of-arrays so the hot loops can run as numba
kernels; `LimbBody` / `JointConstraint` are lightweight views for callers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import (
    inv_inertia_world,
    maybe_njit,
    capsule_inertia,
    quat_angvel,
    quat_integrate,
    quat_mul,
    quat_normalize,
    quat_rotate,
)
from .terrain import ABSENT, TerrainSpec, height_at, tile_index


class SimulationFault(RuntimeError):
    """Non-finite state detected; carries the first offending limb index."""

    def __init__(self, limb: int, time: float):
        super().__init__(f"non-finite state on limb {limb} at t={time:.4f}s")
        self.limb = limb
        self.time = time


@dataclass
class PhysicsConfig:
    gravity: float = 9.81
    dt: float = 0.01                  # physics substep
    substeps_per_control: int = 5     # control interval = 0.05 s
    solver_iters: int = 10
    mu: float = 0.8
    tau_max: float = 30.0
    limb_length: float = 1.0
    limb_radius: float = 0.1
    limb_mass: float = 1.0
    joint_tolerance: float = 1e-3
    contact_tolerance: float = 1e-3
    touch_threshold: float = 1e-2
    magnetic_range_factor: float = 1.33
    dock_step: float = 0.3            # max anchor closure per substep while docking
    dock_snap_tol: float = 0.02
    angular_drag_factor: float = 0.2  # angular drag = factor * drag_coeff

    @property
    def control_dt(self) -> float:
        return self.dt * self.substeps_per_control

    @property
    def magnetic_range(self) -> float:
        return self.magnetic_range_factor * self.limb_length


@dataclass
class WindSpec:
    active: bool = False
    force_max: float = 0.0            # N
    probability_per_step: float = 0.0  # Bernoulli per limb per control step

    def validate(self):
        if self.force_max < 0:
            raise ValueError("wind force_max must be nonnegative")
        if not (0.0 <= self.probability_per_step <= 1.0):
            raise ValueError("wind probability_per_step must be in [0, 1]")


@dataclass
class EnvModifiers:
    wind: WindSpec = field(default_factory=WindSpec)
    drag_coeff: float = 0.0           # N*s/m; 0 = air, >0 = water

    def validate(self):
        self.wind.validate()
        if self.drag_coeff < 0:
            raise ValueError("drag_coeff must be nonnegative")


@dataclass
class LimbBody:
    """View over one limb's state; array fields write through to the world."""

    id: int
    position: np.ndarray
    orientation: np.ndarray
    lin_vel: np.ndarray
    ang_vel: np.ndarray
    length: float
    radius: float
    mass: float
    inertia: np.ndarray

    def parent_anchor(self) -> np.ndarray:
        return self.position + quat_rotate(
            self.orientation, np.array([0.0, 0.0, +0.5 * self.length])
        )

    def child_anchor(self) -> np.ndarray:
        return self.position + quat_rotate(
            self.orientation, np.array([0.0, 0.0, -0.5 * self.length])
        )


@dataclass
class JointConstraint:
    parent_limb: int
    child_limb: int
    compliance: float = 0.0


class WorldState:
    """All mutable simulation state for one arena."""

    def __init__(
        self,
        num_limbs: int,
        terrain: TerrainSpec,
        modifiers: EnvModifiers | None = None,
        config: PhysicsConfig | None = None,
        seed: int = 0,
    ):
        self.config = config or PhysicsConfig()
        self.modifiers = modifiers or EnvModifiers()
        self.modifiers.validate()
        self.terrain = terrain
        self.time = 0.0
        self.rng = np.random.Generator(np.random.PCG64(seed))

        n = num_limbs
        c = self.config
        self.pos = np.zeros((n, 3))
        self.quat = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (n, 1))
        self.linvel = np.zeros((n, 3))
        self.angvel = np.zeros((n, 3))
        self.length = np.full(n, c.limb_length)
        self.radius = np.full(n, c.limb_radius)
        self.mass = np.full(n, c.limb_mass)
        self.inertia = np.tile(
            capsule_inertia(c.limb_mass, c.limb_length, c.limb_radius), (n, 1)
        )
        self.ext_force = np.zeros((n, 3))       # world frame, consumed per substep
        self.ext_torque = np.zeros((n, 3))      # world frame, consumed per substep
        self.act_torque = np.zeros((n, 3))      # body frame, consumed per substep
        self.wind_force = np.zeros((n, 3))      # world frame, persists one control step
        self.wind_point = np.zeros(n)           # axial application offset, body frame

        self.joint_parent = np.zeros(0, dtype=np.int64)
        self.joint_child = np.zeros(0, dtype=np.int64)
        self.joint_compliance = np.zeros(0)
        self.joint_snapped = np.zeros(0, dtype=np.uint8)

        # contact scratch: 3 axial sample points per limb (child tip, mid, parent tip)
        self.contact_lambda = np.zeros((n, 3))
        self.contact_normal = np.zeros((n, 3, 3))
        self.contact_flag = np.zeros((n, 3), dtype=np.uint8)

        self._prev_pos = np.zeros((n, 3))
        self._prev_quat = np.zeros((n, 4))

    # ---- spec-facing views -------------------------------------------------

    @property
    def num_limbs(self) -> int:
        return self.pos.shape[0]

    @property
    def limbs(self) -> list[LimbBody]:
        return [self.limb(i) for i in range(self.num_limbs)]

    def limb(self, i: int) -> LimbBody:
        if not (0 <= i < self.num_limbs):
            raise IndexError(f"unknown limb index {i}")
        return LimbBody(
            id=i,
            position=self.pos[i],
            orientation=self.quat[i],
            lin_vel=self.linvel[i],
            ang_vel=self.angvel[i],
            length=float(self.length[i]),
            radius=float(self.radius[i]),
            mass=float(self.mass[i]),
            inertia=self.inertia[i],
        )

    @property
    def joints(self) -> list[JointConstraint]:
        return [
            JointConstraint(int(p), int(c), float(a))
            for p, c, a in zip(self.joint_parent, self.joint_child, self.joint_compliance)
        ]

    def add_joint(self, parent: int, child: int, compliance: float = 0.0):
        if child in self.joint_child:
            raise ValueError(f"limb {child} is already a child in a joint")
        self.joint_parent = np.append(self.joint_parent, np.int64(parent))
        self.joint_child = np.append(self.joint_child, np.int64(child))
        self.joint_compliance = np.append(self.joint_compliance, float(compliance))
        self.joint_snapped = np.append(self.joint_snapped, np.uint8(0))

    def remove_joint_by_child(self, child: int):
        keep = self.joint_child != child
        self.joint_parent = self.joint_parent[keep]
        self.joint_child = self.joint_child[keep]
        self.joint_compliance = self.joint_compliance[keep]
        self.joint_snapped = self.joint_snapped[keep]

    def parent_anchor(self, i: int) -> np.ndarray:
        return self.pos[i] + quat_rotate(
            self.quat[i], np.array([0.0, 0.0, +0.5 * self.length[i]])
        )

    def child_anchor(self, i: int) -> np.ndarray:
        return self.pos[i] + quat_rotate(
            self.quat[i], np.array([0.0, 0.0, -0.5 * self.length[i]])
        )

    def clone(self) -> "WorldState":
        import copy

        other = WorldState.__new__(WorldState)
        other.config = self.config
        other.modifiers = copy.deepcopy(self.modifiers)
        other.terrain = self.terrain
        other.time = self.time
        other.rng = copy.deepcopy(self.rng)
        for name in (
            "pos", "quat", "linvel", "angvel", "length", "radius", "mass",
            "inertia", "ext_force", "ext_torque", "act_torque", "wind_force",
            "wind_point", "joint_parent", "joint_child", "joint_compliance",
            "joint_snapped", "contact_lambda", "contact_normal", "contact_flag",
            "_prev_pos", "_prev_quat",
        ):
            setattr(other, name, getattr(self, name).copy())
        return other


# ---- operations -------------------------------------------------------------


def apply_torque(world: WorldState, limb: int, torque) -> WorldState:
    """Accumulate a body-frame actuation torque; consumed by the next substep."""
    if not (0 <= limb < world.num_limbs):
        raise IndexError(f"unknown limb index {limb}")
    t = world.config.tau_max
    world.act_torque[limb] += np.clip(np.asarray(torque, dtype=float), -t, t)
    return world


def apply_drag(world: WorldState) -> WorldState:
    """Add linear/angular drag to the external accumulators for this substep."""
    c = world.modifiers.drag_coeff
    if c == 0.0:
        return world
    world.ext_force -= c * world.linvel
    world.ext_torque -= (world.config.angular_drag_factor * c) * world.angvel
    return world


def apply_wind(world: WorldState) -> WorldState:
    """Resample per-limb wind forces for the coming control interval.

    Each limb independently receives, with the configured probability, a
    horizontal force of uniform random magnitude applied at a uniform random
    point along its axis.
    """
    wind = world.modifiers.wind
    if not wind.active:
        return world
    world.wind_force[:] = 0.0
    world.wind_point[:] = 0.0
    rng = world.rng
    for i in range(world.num_limbs):
        if rng.random() < wind.probability_per_step:
            mag = rng.uniform(0.0, wind.force_max)
            ang = rng.uniform(0.0, 2.0 * math.pi)
            world.wind_force[i, 0] = mag * math.cos(ang)
            world.wind_force[i, 2] = mag * math.sin(ang)
            world.wind_point[i] = rng.uniform(-0.5, 0.5) * world.length[i]
    return world


def step(world: WorldState, dt: float) -> WorldState:
    """Advance one physics substep. dt must equal the configured substep."""
    cfg = world.config
    if abs(dt - cfg.dt) > 1e-12:
        raise ValueError(f"step dt {dt} != configured substep {cfg.dt}")
    apply_drag(world)
    t = world.terrain
    world.contact_lambda[:] = 0.0
    world.contact_flag[:] = 0
    _k_integrate(
        world.pos, world.quat, world.linvel, world.angvel,
        world.mass, 1.0 / world.inertia,
        world.ext_force, world.ext_torque, world.act_torque,
        world.wind_force, world.wind_point,
        cfg.gravity, dt, world._prev_pos, world._prev_quat,
    )
    _k_solve(
        world.pos, world.quat, world._prev_pos, world._prev_quat,
        1.0 / world.mass, 1.0 / world.inertia, world.length, world.radius,
        world.joint_parent, world.joint_child, world.joint_compliance,
        world.joint_snapped,
        t.grid, t.params.origin_x, t.params.origin_z, t.params.tile_size,
        cfg.solver_iters, dt, cfg.dock_step, cfg.dock_snap_tol,
        world.contact_lambda, world.contact_normal, world.contact_flag,
    )
    bad = _k_finalize(
        world.pos, world.quat, world._prev_pos, world._prev_quat,
        world.linvel, world.angvel,
        1.0 / world.mass, 1.0 / world.inertia, world.length,
        cfg.mu, dt,
        world.contact_lambda, world.contact_normal, world.contact_flag,
        1,
    )
    if bad >= 0:
        raise SimulationFault(int(bad), world.time)
    world.time += dt
    return world


def resolve_contacts(world: WorldState) -> WorldState:
    """Project penetrating capsule points out of the terrain and apply friction.

    Standalone form of the contact stage: positions are corrected in place,
    Coulomb friction acts on the current velocities, and per-end contact flags
    are recorded. Velocities are otherwise left untouched.
    """
    cfg = world.config
    t = world.terrain
    world.contact_lambda[:] = 0.0
    world.contact_flag[:] = 0
    empty_i = np.zeros(0, dtype=np.int64)
    empty_f = np.zeros(0)
    empty_b = np.zeros(0, dtype=np.uint8)
    world._prev_pos[:] = world.pos
    world._prev_quat[:] = world.quat
    _k_solve(
        world.pos, world.quat, world._prev_pos, world._prev_quat,
        1.0 / world.mass, 1.0 / world.inertia, world.length, world.radius,
        empty_i, empty_i, empty_f, empty_b,
        t.grid, t.params.origin_x, t.params.origin_z, t.params.tile_size,
        cfg.solver_iters, cfg.dt, cfg.dock_step, cfg.dock_snap_tol,
        world.contact_lambda, world.contact_normal, world.contact_flag,
    )
    bad = _k_finalize(
        world.pos, world.quat, world._prev_pos, world._prev_quat,
        world.linvel, world.angvel,
        1.0 / world.mass, 1.0 / world.inertia, world.length,
        cfg.mu, cfg.dt,
        world.contact_lambda, world.contact_normal, world.contact_flag,
        0,
    )
    if bad >= 0:
        raise SimulationFault(int(bad), world.time)
    return world


def floor_clearance(world: WorldState, limb: int, end: str) -> float:
    """Gap between a capsule end's surface and the terrain (inf if absent)."""
    off = +0.5 if end == "parent" else -0.5
    p = world.pos[limb] + quat_rotate(
        world.quat[limb], np.array([0.0, 0.0, off * world.length[limb]])
    )
    t = world.terrain
    h = height_at(
        t.grid, t.params.origin_x, t.params.origin_z, t.params.tile_size, p[0], p[2]
    )
    if h <= ABSENT * 0.5:
        return math.inf
    return float(p[1] - world.radius[limb] - h)


def total_linear_momentum(world: WorldState) -> np.ndarray:
    return (world.mass[:, None] * world.linvel).sum(axis=0)


def total_energy(world: WorldState) -> float:
    """Kinetic + gravitational potential energy; diagnostics for tests."""
    ke = 0.5 * (world.mass * (world.linvel ** 2).sum(axis=1)).sum()
    for i in range(world.num_limbs):
        iw = np.linalg.inv(inv_inertia_world(world.quat[i], 1.0 / world.inertia[i]))
        ke += 0.5 * world.angvel[i] @ iw @ world.angvel[i]
    pe = (world.mass * world.config.gravity * world.pos[:, 1]).sum()
    return float(ke + pe)


# ---- kernels ----------------------------------------------------------------


@maybe_njit
def _k_integrate(
    pos, quat, linvel, angvel, mass, inv_inertia,
    ext_force, ext_torque, act_torque, wind_force, wind_point,
    gravity, dt, prev_pos, prev_quat,
):
    n = pos.shape[0]
    for i in range(n):
        tau = quat_rotate(quat[i], act_torque[i])
        r_w = quat_rotate(quat[i], np.array([0.0, 0.0, wind_point[i]]))
        tau[0] += ext_torque[i, 0] + r_w[1] * wind_force[i, 2] - r_w[2] * wind_force[i, 1]
        tau[1] += ext_torque[i, 1] + r_w[2] * wind_force[i, 0] - r_w[0] * wind_force[i, 2]
        tau[2] += ext_torque[i, 2] + r_w[0] * wind_force[i, 1] - r_w[1] * wind_force[i, 0]

        inv_m = 1.0 / mass[i]
        linvel[i, 0] += dt * (ext_force[i, 0] + wind_force[i, 0]) * inv_m
        linvel[i, 1] += dt * ((ext_force[i, 1] + wind_force[i, 1]) * inv_m - gravity)
        linvel[i, 2] += dt * (ext_force[i, 2] + wind_force[i, 2]) * inv_m

        iw = inv_inertia_world(quat[i], inv_inertia[i])
        for a in range(3):
            acc = 0.0
            for b in range(3):
                acc += iw[a, b] * tau[b]
            angvel[i, a] += dt * acc

        for a in range(3):
            prev_pos[i, a] = pos[i, a]
            pos[i, a] += dt * linvel[i, a]
        for a in range(4):
            prev_quat[i, a] = quat[i, a]
        quat[i] = quat_integrate(quat[i], angvel[i], dt)

        for a in range(3):
            ext_force[i, a] = 0.0
            ext_torque[i, a] = 0.0
            act_torque[i, a] = 0.0


@maybe_njit
def _apply_impulse(pos, quat, prev_pos, prev_quat, inv_mass, inv_inertia,
                   i, r_arm, impulse, adjust_prev):
    for a in range(3):
        pos[i, a] += impulse[a] * inv_mass[i]
    iw = inv_inertia_world(quat[i], inv_inertia[i])
    rxp = np.empty(3)
    rxp[0] = r_arm[1] * impulse[2] - r_arm[2] * impulse[1]
    rxp[1] = r_arm[2] * impulse[0] - r_arm[0] * impulse[2]
    rxp[2] = r_arm[0] * impulse[1] - r_arm[1] * impulse[0]
    dw = np.empty(3)
    for a in range(3):
        acc = 0.0
        for b in range(3):
            acc += iw[a, b] * rxp[b]
        dw[a] = acc
    dq = np.empty(4)
    dq[0] = 0.0
    dq[1] = dw[0]
    dq[2] = dw[1]
    dq[3] = dw[2]
    delta = quat_mul(dq, quat[i])
    q_new = np.empty(4)
    for a in range(4):
        q_new[a] = quat[i, a] + 0.5 * delta[a]
    quat[i] = quat_normalize(q_new)
    if adjust_prev:
        for a in range(3):
            prev_pos[i, a] += impulse[a] * inv_mass[i]
        delta_p = quat_mul(dq, prev_quat[i])
        qp_new = np.empty(4)
        for a in range(4):
            qp_new[a] = prev_quat[i, a] + 0.5 * delta_p[a]
        prev_quat[i] = quat_normalize(qp_new)


@maybe_njit
def _gen_inv_mass(quat_i, inv_mass_i, inv_inertia_i, r_arm, n_dir):
    rxn = np.empty(3)
    rxn[0] = r_arm[1] * n_dir[2] - r_arm[2] * n_dir[1]
    rxn[1] = r_arm[2] * n_dir[0] - r_arm[0] * n_dir[2]
    rxn[2] = r_arm[0] * n_dir[1] - r_arm[1] * n_dir[0]
    iw = inv_inertia_world(quat_i, inv_inertia_i)
    w = inv_mass_i
    for a in range(3):
        acc = 0.0
        for b in range(3):
            acc += iw[a, b] * rxn[b]
        w += rxn[a] * acc
    return w


@maybe_njit
def _k_solve(
    pos, quat, prev_pos, prev_quat, inv_mass, inv_inertia, length, radius,
    jparent, jchild, jcompliance, jsnapped,
    grid, origin_x, origin_z, tile,
    iters, dt, dock_step, snap_tol,
    contact_lambda, contact_normal, contact_flag,
):
    n = pos.shape[0]
    m = jparent.shape[0]
    jlam = np.zeros(m)
    for it in range(iters):
        # ball joints, ascending joint order (Gauss-Seidel)
        for j in range(m):
            p = jparent[j]
            c = jchild[j]
            ap = pos[p] + quat_rotate(quat[p], np.array([0.0, 0.0, 0.5 * length[p]]))
            ac = pos[c] + quat_rotate(quat[c], np.array([0.0, 0.0, -0.5 * length[c]]))
            d = np.empty(3)
            for a in range(3):
                d[a] = ap[a] - ac[a]
            cmag = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
            docking = jsnapped[j] == 0
            if docking:
                if cmag <= snap_tol:
                    jsnapped[j] = 1
                    docking = False
                elif it > 0:
                    continue
            if cmag < 1e-12:
                continue
            nrm = np.empty(3)
            for a in range(3):
                nrm[a] = d[a] / cmag
            rp = np.empty(3)
            rc = np.empty(3)
            for a in range(3):
                rp[a] = ap[a] - pos[p, a]
                rc[a] = ac[a] - pos[c, a]
            wp = _gen_inv_mass(quat[p], inv_mass[p], inv_inertia[p], rp, nrm)
            wc = _gen_inv_mass(quat[c], inv_mass[c], inv_inertia[c], rc, nrm)
            alpha = jcompliance[j] / (dt * dt)
            dlam = -(cmag + alpha * jlam[j]) / (wp + wc + alpha)
            if docking:
                cap = dock_step / (wp + wc)
                if -dlam > cap:
                    dlam = -cap
            jlam[j] += dlam
            imp = np.empty(3)
            for a in range(3):
                imp[a] = dlam * nrm[a]
            _apply_impulse(pos, quat, prev_pos, prev_quat, inv_mass, inv_inertia,
                           p, rp, imp, docking)
            for a in range(3):
                imp[a] = -imp[a]
            _apply_impulse(pos, quat, prev_pos, prev_quat, inv_mass, inv_inertia,
                           c, rc, imp, docking)

        # terrain contacts at 3 axial sample points per limb
        for i in range(n):
            for s in range(3):
                toff = (s - 1) * 0.5 * length[i]
                pw = pos[i] + quat_rotate(quat[i], np.array([0.0, 0.0, toff]))
                h = height_at(grid, origin_x, origin_z, tile, pw[0], pw[2])
                if h <= ABSENT * 0.5:
                    continue
                pen_up = h + radius[i] - pw[1]
                if pen_up <= 0.0:
                    continue
                # candidate projection directions: straight up, or out the
                # nearest tile side whose neighbor surface admits the point
                best_c = pen_up
                nx, ny, nz = 0.0, 1.0, 0.0
                r_cell = tile_index(pw[0], origin_x, tile)
                c_cell = tile_index(pw[2], origin_z, tile)
                x0 = origin_x + r_cell * tile
                z0 = origin_z + c_cell * tile
                rows = grid.shape[0]
                cols = grid.shape[1]
                for k in range(4):
                    if k == 0:
                        rr, cc = r_cell - 1, c_cell
                        dist = (pw[0] - x0) + radius[i]
                        cand = (-1.0, 0.0, 0.0)
                    elif k == 1:
                        rr, cc = r_cell + 1, c_cell
                        dist = (x0 + tile - pw[0]) + radius[i]
                        cand = (1.0, 0.0, 0.0)
                    elif k == 2:
                        rr, cc = r_cell, c_cell - 1
                        dist = (pw[2] - z0) + radius[i]
                        cand = (0.0, 0.0, -1.0)
                    else:
                        rr, cc = r_cell, c_cell + 1
                        dist = (z0 + tile - pw[2]) + radius[i]
                        cand = (0.0, 0.0, 1.0)
                    if 0 <= rr < rows and 0 <= cc < cols:
                        hn = grid[rr, cc]
                        if hn > -5.0e5 and hn + radius[i] > pw[1] + 1e-9:
                            continue  # neighbor surface too high to admit the point
                    if dist < best_c:
                        best_c = dist
                        nx, ny, nz = cand
                nrm = np.empty(3)
                nrm[0], nrm[1], nrm[2] = nx, ny, nz
                r_arm = np.empty(3)
                for a in range(3):
                    r_arm[a] = pw[a] - pos[i, a]
                w = _gen_inv_mass(quat[i], inv_mass[i], inv_inertia[i], r_arm, nrm)
                dlam = best_c / w
                imp = np.empty(3)
                for a in range(3):
                    imp[a] = dlam * nrm[a]
                _apply_impulse(pos, quat, prev_pos, prev_quat, inv_mass, inv_inertia,
                               i, r_arm, imp, False)
                contact_lambda[i, s] += dlam
                for a in range(3):
                    contact_normal[i, s, a] = nrm[a]
                contact_flag[i, s] = 1


@maybe_njit
def _k_finalize(
    pos, quat, prev_pos, prev_quat, linvel, angvel,
    inv_mass, inv_inertia, length, mu, dt,
    contact_lambda, contact_normal, contact_flag,
    recompute_velocities,
):
    n = pos.shape[0]
    if recompute_velocities:
        for i in range(n):
            for a in range(3):
                linvel[i, a] = (pos[i, a] - prev_pos[i, a]) / dt
            angvel[i] = quat_angvel(prev_quat[i], quat[i], dt)
    if mu > 0.0:
        for i in range(n):
            for s in range(3):
                if contact_flag[i, s] == 0:
                    continue
                toff = (s - 1) * 0.5 * length[i]
                r_arm = quat_rotate(quat[i], np.array([0.0, 0.0, toff]))
                vpt = np.empty(3)
                vpt[0] = linvel[i, 0] + angvel[i, 1] * r_arm[2] - angvel[i, 2] * r_arm[1]
                vpt[1] = linvel[i, 1] + angvel[i, 2] * r_arm[0] - angvel[i, 0] * r_arm[2]
                vpt[2] = linvel[i, 2] + angvel[i, 0] * r_arm[1] - angvel[i, 1] * r_arm[0]
                nrm = contact_normal[i, s]
                vn = vpt[0] * nrm[0] + vpt[1] * nrm[1] + vpt[2] * nrm[2]
                vt = np.empty(3)
                for a in range(3):
                    vt[a] = vpt[a] - vn * nrm[a]
                vtm = math.sqrt(vt[0] ** 2 + vt[1] ** 2 + vt[2] ** 2)
                if vtm < 1e-12:
                    continue
                t_hat = np.empty(3)
                for a in range(3):
                    t_hat[a] = vt[a] / vtm
                w_t = _gen_inv_mass(quat[i], inv_mass[i], inv_inertia[i], r_arm, t_hat)
                p_needed = vtm / w_t
                p_cap = mu * contact_lambda[i, s] / dt
                p_mag = p_needed if p_needed < p_cap else p_cap
                iw = inv_inertia_world(quat[i], inv_inertia[i])
                rxp = np.empty(3)
                rxp[0] = -(r_arm[1] * t_hat[2] - r_arm[2] * t_hat[1]) * p_mag
                rxp[1] = -(r_arm[2] * t_hat[0] - r_arm[0] * t_hat[2]) * p_mag
                rxp[2] = -(r_arm[0] * t_hat[1] - r_arm[1] * t_hat[0]) * p_mag
                for a in range(3):
                    linvel[i, a] -= t_hat[a] * p_mag * inv_mass[i]
                    acc = 0.0
                    for b in range(3):
                        acc += iw[a, b] * rxp[b]
                    angvel[i, a] += acc
    for i in range(n):
        for a in range(3):
            if not (math.isfinite(pos[i, a]) and math.isfinite(linvel[i, a])
                    and math.isfinite(angvel[i, a])):
                return i
        for a in range(4):
            if not math.isfinite(quat[i, a]):
                return i
    return -1
