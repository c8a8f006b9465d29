"""Deterministic software rasterizer.

One visibility resolve drives both output passes, so the shaded render
and the instance label map are geometrically identical by construction:
perspective projection, pixel-center point sampling (never multisample),
and a strict nearest-wins z rule with first-drawn winning ties. The RGB
pass gains smoothness only through the later Gaussian blur; the label
pass is never interpolated, shaded, anti-aliased or blurred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .camera import Camera, Light
from .plant import PlantModel

_NEAR = 1e-6
_MIN_SCREEN_AREA = 1e-12


@dataclass
class FrameBuffer:
    """Shaded color, binary pixel-center coverage, and view depth (+inf = empty)."""

    color: np.ndarray    # (H, W, 3) uint8
    alpha: np.ndarray    # (H, W) uint8, values in {0, 1}
    depth: np.ndarray    # (H, W) float64


class _Resolved:
    """Per-pixel winner of the z contest plus perspective-correct attributes.

    att packs [u, v, nx, ny, nz, px, py, pz] each divided by view depth;
    dividing by invw recovers the interpolated values.
    """

    __slots__ = ("label", "invw", "att", "width", "height")

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.label = np.zeros((height, width), dtype=np.int32)
        self.invw = np.zeros((height, width), dtype=np.float64)
        self.att = np.zeros((height, width, 8), dtype=np.float64)


def _pixel_span(lo: float, hi: float, limit: int) -> tuple[int, int]:
    # pixel centers sit at integer + 0.5
    first = max(0, int(math.ceil(lo - 0.5)))
    last = min(limit - 1, int(math.floor(hi - 0.5)))
    return first, last


def _resolve_visibility(plant: PlantModel, cam: Camera) -> _Resolved:
    res = _Resolved(cam.width, cam.height)
    for leaf in plant.leaves:
        mesh = leaf.mesh
        px, py, depth = cam.project(mesh.vertices)
        if (depth <= _NEAR).any():
            raise ValueError(
                f"leaf {leaf.instance_id} has vertices behind the camera plane; "
                "the camera contract requires the plant fully inside the frustum")
        invw_v = 1.0 / depth
        attrs = np.concatenate([mesh.uvs, mesh.normals, mesh.vertices], axis=1)
        attrs_w = attrs * invw_v[:, None]

        f = mesh.faces
        x0, x1, x2 = px[f[:, 0]], px[f[:, 1]], px[f[:, 2]]
        y0, y1, y2 = py[f[:, 0]], py[f[:, 1]], py[f[:, 2]]
        areas = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)

        for k in range(len(f)):
            area = areas[k]
            if abs(area) < _MIN_SCREEN_AREA:
                continue
            cmin, cmax = _pixel_span(min(x0[k], x1[k], x2[k]),
                                     max(x0[k], x1[k], x2[k]), cam.width)
            rmin, rmax = _pixel_span(min(y0[k], y1[k], y2[k]),
                                     max(y0[k], y1[k], y2[k]), cam.height)
            if cmax < cmin or rmax < rmin:
                continue
            xs = (np.arange(cmin, cmax + 1) + 0.5)[None, :]
            ys = (np.arange(rmin, rmax + 1) + 0.5)[:, None]

            l0 = ((x1[k] - xs) * (y2[k] - ys) - (y1[k] - ys) * (x2[k] - xs)) / area
            l1 = ((x2[k] - xs) * (y0[k] - ys) - (y2[k] - ys) * (x0[k] - xs)) / area
            l2 = 1.0 - l0 - l1
            inside = (l0 >= 0.0) & (l1 >= 0.0) & (l2 >= 0.0)
            if not inside.any():
                continue

            i0, i1, i2 = f[k]
            invw_px = l0 * invw_v[i0] + l1 * invw_v[i1] + l2 * invw_v[i2]
            buf = res.invw[rmin:rmax + 1, cmin:cmax + 1]
            win = inside & (invw_px > buf)
            if not win.any():
                continue
            rows, cols = np.nonzero(win)
            w0, w1, w2 = l0[win], l1[win], l2[win]
            buf[rows, cols] = invw_px[win]
            res.label[rmin + rows, cmin + cols] = leaf.instance_id
            res.att[rmin + rows, cmin + cols] = (
                np.outer(w0, attrs_w[i0]) + np.outer(w1, attrs_w[i1])
                + np.outer(w2, attrs_w[i2]))
    return res


def bilinear_sample(texture: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear texel fetch; u right, v down, both clipped to [0, 1]."""
    h, w = texture.shape[:2]
    x = np.clip(u, 0.0, 1.0) * (w - 1)
    y = np.clip(v, 0.0, 1.0) * (h - 1)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]
    t00 = texture[y0, x0]
    t01 = texture[y0, x1]
    t10 = texture[y1, x0]
    t11 = texture[y1, x1]
    top = t00 * (1 - fx) + t01 * fx
    bot = t10 * (1 - fx) + t11 * fx
    return top * (1 - fy) + bot * fy


def _shade(res: _Resolved, plant: PlantModel, albedos: list[np.ndarray],
           cam: Camera, light: Light, shading: str, roughness: float) -> np.ndarray:
    covered = res.invw > 0.0
    color = np.zeros((res.height, res.width, 3), dtype=np.float64)
    if not covered.any():
        return color
    iw = res.invw[covered][:, None]
    att = res.att[covered]
    uv = att[:, 0:2] / iw
    n = att[:, 2:5] / iw
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    p = att[:, 5:8] / iw

    l = light.position[None, :] - p
    l /= np.linalg.norm(l, axis=1, keepdims=True)
    view = cam.position[None, :] - p
    view /= np.linalg.norm(view, axis=1, keepdims=True)
    # leaves are open sheets: shade two-sided, normal flipped toward the viewer
    side = np.sign(np.einsum("ij,ij->i", n, view))
    side[side == 0] = 1.0
    n = n * side[:, None]

    cos_i = np.clip(np.einsum("ij,ij->i", n, l), 0.0, 1.0)
    if shading == "lambertian":
        factor = cos_i
    elif shading == "oren_nayar":
        s2 = roughness * roughness
        a_term = 1.0 - 0.5 * s2 / (s2 + 0.33)
        b_term = 0.45 * s2 / (s2 + 0.09)
        cos_o = np.clip(np.einsum("ij,ij->i", n, view), 0.0, 1.0)
        sin_i = np.sqrt(np.clip(1.0 - cos_i * cos_i, 0.0, 1.0))
        sin_o = np.sqrt(np.clip(1.0 - cos_o * cos_o, 0.0, 1.0))
        tang_l = l - n * cos_i[:, None]
        tang_v = view - n * cos_o[:, None]
        denom = sin_i * sin_o
        cos_dphi = np.where(denom > 1e-9,
                            np.einsum("ij,ij->i", tang_l, tang_v) / np.maximum(denom, 1e-9),
                            0.0)
        mc = np.maximum(0.0, np.clip(cos_dphi, -1.0, 1.0))
        sin_alpha = np.maximum(sin_i, sin_o)
        tan_beta = np.minimum(sin_i, sin_o) / np.maximum(np.maximum(cos_i, cos_o), 1e-9)
        factor = cos_i * (a_term + b_term * mc * sin_alpha * tan_beta)
    else:
        raise ValueError(f"unknown shading model {shading!r}")
    # diffuse-only ceiling: never exceed albedo x light intensity
    factor = np.clip(factor, 0.0, 1.0)

    flat = np.zeros((len(uv), 3), dtype=np.float64)
    labels_flat = res.label[covered]
    for idx, leaf in enumerate(plant.leaves):
        sel = labels_flat == leaf.instance_id
        if not sel.any():
            continue
        albedo = bilinear_sample(albedos[idx], uv[sel, 0], uv[sel, 1])
        flat[sel] = albedo * light.intensity[None, :] * factor[sel, None]
    color[covered] = flat
    return color


def _as_albedo(texture) -> np.ndarray:
    pixels = texture.pixels if hasattr(texture, "pixels") else np.asarray(texture)
    if pixels.dtype == np.uint8:
        return pixels.astype(np.float64) / 255.0
    return np.asarray(pixels, dtype=np.float64)


def render_plant(plant: PlantModel, textures, cam: Camera, light: Light,
                 shading: str = "oren_nayar", roughness: float = 0.3
                 ) -> tuple[FrameBuffer, np.ndarray]:
    """Render both passes from one shared visibility resolve.

    textures: one albedo per leaf, aligned with plant.leaves (TextureImage
    or array; uint8 arrays are normalized to [0,1]).
    Returns (FrameBuffer, label map). Label pixels are exactly the leaf
    instance id visible at each pixel center, 0 for background.
    """
    if len(textures) != len(plant.leaves):
        raise ValueError(f"need one texture per leaf: {len(textures)} textures "
                         f"for {len(plant.leaves)} leaves")
    res = _resolve_visibility(plant, cam)
    albedos = [_as_albedo(t) for t in textures]
    color = _shade(res, plant, albedos, cam, light, shading, roughness)
    covered = res.invw > 0.0
    depth = np.full((res.height, res.width), np.inf)
    depth[covered] = 1.0 / res.invw[covered]
    fb = FrameBuffer(color=np.clip(np.rint(color * 255.0), 0, 255).astype(np.uint8),
                     alpha=covered.astype(np.uint8),
                     depth=depth)
    return fb, res.label.copy()


def rasterize_rgb(plant: PlantModel, textures, cam: Camera, light: Light,
                  shading: str = "oren_nayar", roughness: float = 0.3) -> FrameBuffer:
    fb, _ = render_plant(plant, textures, cam, light, shading, roughness)
    return fb


def rasterize_labels(plant: PlantModel, cam: Camera) -> np.ndarray:
    """Instance label map only: same geometry and z rule as the RGB pass."""
    res = _resolve_visibility(plant, cam)
    return res.label.copy()


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Discrete Gaussian: samples at integer offsets within radius ceil(3*sigma),
    normalized to sum 1."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    if radius == 0:
        return np.ones(1)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflected edges; sigma 0 is the identity.

    Intended for premultiplied color plus coverage so the fractional alpha
    feeds compositing; label maps must never pass through here.
    """
    out = np.asarray(image, dtype=np.float64).copy()
    if sigma == 0:
        return out
    kernel = gaussian_kernel1d(sigma)
    out = ndimage.convolve1d(out, kernel, axis=0, mode="reflect")
    out = ndimage.convolve1d(out, kernel, axis=1, mode="reflect")
    return out


def composite_over_background(fg_premult: np.ndarray, alpha: np.ndarray,
                              background: np.ndarray) -> np.ndarray:
    """Standard over-operator; fg premultiplied in [0,1], background uint8.

    The background must already match the frame dimensions.
    """
    fg_premult = np.asarray(fg_premult, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if background.shape[:2] != fg_premult.shape[:2] or alpha.shape != fg_premult.shape[:2]:
        raise ValueError(f"dimension mismatch: fg {fg_premult.shape[:2]}, "
                         f"alpha {alpha.shape}, background {background.shape[:2]}")
    bg = background.astype(np.float64) / 255.0
    out = fg_premult + (1.0 - alpha)[..., None] * bg
    return np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)
