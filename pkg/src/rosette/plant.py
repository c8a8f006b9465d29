"""Rosette assembly: leaves stemming out from a sphere.

Leaf anchors sit on a placement sphere, equally likely at any azimuth and
concentrated near the equator (a clamped Gaussian in polar angle). Each
leaf's yaw doubles as its anchor azimuth so blades extend radially
outward. Leaves may interpenetrate and occlude each other; no collision
rejection is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import GenerationConfig
from .leaf import LeafDeformParams, blade_length, deform_leaf, leaf_local_to_world
from .mesh import TriangleMesh
from .rng import RandomSource, sample_normal, sample_uniform


@dataclass
class LeafInstance:
    instance_id: int              # 1..N, dense within one plant
    mesh: TriangleMesh            # world space
    params: LeafDeformParams
    texture_ref: str = ""


@dataclass
class PlantModel:
    leaves: list[LeafInstance]
    sphere_radius: float
    centroid: np.ndarray = field(default=None)   # mean of all leaf vertices

    def __post_init__(self):
        if not self.leaves:
            raise ValueError("a plant needs at least one leaf")
        if self.centroid is None:
            self.centroid = np.concatenate([l.mesh.vertices for l in self.leaves]).mean(axis=0)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        los = np.array([l.mesh.vertices.min(axis=0) for l in self.leaves])
        his = np.array([l.mesh.vertices.max(axis=0) for l in self.leaves])
        return los.min(axis=0), his.max(axis=0)


def sample_leaf_count(src: RandomSource, cfg: GenerationConfig) -> int:
    """Truncated-normal leaf count, rounded to the nearest integer."""
    x = sample_normal(src, cfg.leaf_count_mean, cfg.leaf_count_stddev,
                      float(cfg.leaf_count_min), float(cfg.leaf_count_max))
    return int(min(max(round(x), cfg.leaf_count_min), cfg.leaf_count_max))


def sample_leaf_pose(src: RandomSource, cfg: GenerationConfig,
                     sphere_radius: float) -> LeafDeformParams:
    """Draw one leaf's pose; the draw order below is part of the contract."""
    yaw = sample_uniform(src, *cfg.yaw_range)
    pitch = sample_uniform(src, *cfg.pitch_range)
    roll = sample_uniform(src, *cfg.roll_range)
    sx = sample_uniform(src, *cfg.scale_range_x)
    sy = sample_uniform(src, *cfg.scale_range_y)
    sz = sample_uniform(src, *cfg.scale_range_z)
    bend = sample_uniform(src, *cfg.bend_range)
    polar_offset = sample_normal(src, 0.0, cfg.anchor_polar_sigma,
                                 -cfg.anchor_polar_clamp, cfg.anchor_polar_clamp)
    polar = math.pi / 2 + polar_offset
    anchor = (sphere_radius * math.sin(polar) * math.cos(yaw),
              sphere_radius * math.sin(polar) * math.sin(yaw),
              sphere_radius * math.cos(polar))
    return LeafDeformParams(scale_x=sx, scale_y=sy, scale_z=sz, bend_curl=bend,
                            yaw=yaw, pitch=pitch, roll=roll, anchor=anchor)


def assemble_plant(src: RandomSource, cfg: GenerationConfig,
                   template: TriangleMesh) -> PlantModel:
    """Sample a leaf count, then deform and pose each leaf independently.

    Instance ids are assigned in generation order, 1..N.
    """
    radius = cfg.sphere_radius_factor * blade_length(template)
    count = sample_leaf_count(src, cfg)
    leaves = []
    for instance_id in range(1, count + 1):
        params = sample_leaf_pose(src, cfg, radius)
        mesh = leaf_local_to_world(deform_leaf(template, params), params)
        leaves.append(LeafInstance(instance_id=instance_id, mesh=mesh, params=params))
    return PlantModel(leaves=leaves, sphere_radius=radius)


def scene_dump_text(plant: PlantModel) -> str:
    """Serialize a plant for geometry inspection (the `dump-scene` format).

    Header, then one block per leaf: its id, texture, pose line, and the
    world-space mesh in the v/vt/f text format.
    """
    lines = [f"# rosette scene dump v1",
             f"# leaves {len(plant.leaves)} sphere_radius {plant.sphere_radius!r}"]
    for leaf in plant.leaves:
        p = leaf.params
        lines.append(f"leaf {leaf.instance_id}")
        lines.append(f"texture {leaf.texture_ref}")
        lines.append("pose yaw {!r} pitch {!r} roll {!r} scale {!r} {!r} {!r} "
                     "bend {!r} anchor {!r} {!r} {!r}".format(
                         p.yaw, p.pitch, p.roll, p.scale_x, p.scale_y, p.scale_z,
                         p.bend_curl, *p.anchor))
        for v in leaf.mesh.vertices:
            lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
        for uv in leaf.mesh.uvs:
            lines.append(f"vt {float(uv[0])!r} {float(uv[1])!r}")
        for f in leaf.mesh.faces:
            lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(lines) + "\n"
