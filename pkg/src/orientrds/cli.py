"""
Batch command-line front end.

Subcommands: lift, project, denoise, inpaint, compare, fixtures,
gauge-diag. Every run is a pure function of its inputs, the config file,
and the flag overrides, so identical invocations produce byte-identical
outputs. Exit codes: 0 ok, 2 parameter error, 3 I/O error, 4 numerical
instability.
"""

import argparse
import dataclasses
import math
import os
import sys

import numpy as np

from . import fileio
from .baseline2d import Rds2dParams, run_rds2d
from .core import Image, Mask, NumericalInstabilityError, RdsParams
from .fixtures import (
    circle_fixture,
    crossing_fixture,
    noise_fixture,
    ridge_fixture,
    spiral_fixture,
)
from .gauge import fit_gauge_frame, implied_curvature
from .lift import build_cake_wavelets, lift, project
from .metrics import psnr
from .rds import _default_kernel_size, run_rds


@dataclasses.dataclass
class JobConfig:
    """Flat, typed key-value job description.

    Defaults follow the reference parameterization: unit-cost spatial
    anisotropy for the switches, xi = 0.1, data normalized to [0, 1].
    kernel_size = 0 derives the wavelet support from the image size.
    """

    xi: float = 0.1
    zeta_d: float = 1.0
    zeta_m: float = 1.0
    lam: float = 0.02
    sigma: float = 1.0
    rho: float = 1.0
    nu: float = 1.0
    shock_eps: float = 1e-2
    use_gauge: bool = False
    guidance_refresh: int = 1
    frame_refresh: int = 5
    gauge_sigma: float = 1.0
    degeneracy_tol: float = 0.05
    num_orientations: int = 32
    kernel_size: int = 0
    angular_order: int = 3
    inflection: float = 0.8
    radial_order: int = 8
    time: float = 1.0
    checkpoints: int = 10
    seed: int = 0


_CONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(JobConfig)}


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {float: float, int: int, bool: _parse_bool}


def parse_config(text):
    """Parses 'key = value' lines into a JobConfig.

    Blank lines and '#' comments are skipped; unknown keys and malformed
    values are rejected.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[_CONFIG_FIELDS[key]](value)
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: bad value for {key}: {exc}") from None
    return JobConfig(**values)


def serialize_config(cfg):
    """Canonical text form of a JobConfig; parse(serialize(c)) == c."""
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        text = ("true" if value else "false") if f.type is bool else repr(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def to_rds_params(cfg):
    """Builds RdsParams from a JobConfig."""
    return RdsParams.with_anisotropy(
        xi=cfg.xi, zeta_d=cfg.zeta_d, zeta_m=cfg.zeta_m,
        lam=cfg.lam, sigma=cfg.sigma, rho=cfg.rho, nu=cfg.nu,
        shock_eps=cfg.shock_eps, use_gauge=cfg.use_gauge,
        guidance_refresh=cfg.guidance_refresh, frame_refresh=cfg.frame_refresh,
        gauge_sigma=cfg.gauge_sigma, degeneracy_tol=cfg.degeneracy_tol,
    )


def _add_config_flags(parser):
    for f in dataclasses.fields(JobConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, type=_PARSERS[f.type],
                            default=None, metavar=f.type.__name__.upper(),
                            help=f"override config key {f.name}")


def _load_config(args):
    cfg = JobConfig()
    if getattr(args, "config", None):
        with open(args.config, "r") as fh:
            cfg = parse_config(fh.read())
    overrides = {f.name: getattr(args, f.name)
                 for f in dataclasses.fields(JobConfig)
                 if getattr(args, f.name, None) is not None}
    return dataclasses.replace(cfg, **overrides)


def _wavelets(cfg, image):
    size = cfg.kernel_size if cfg.kernel_size > 0 else _default_kernel_size(image)
    return build_cake_wavelets(cfg.num_orientations, size,
                               angular_order=cfg.angular_order,
                               inflection=cfg.inflection,
                               radial_order=cfg.radial_order)


def _read_mask(path, image):
    mask = fileio.read_image(path).data > 0.5
    if mask.shape != image.data.shape:
        raise ValueError(
            f"mask shape {mask.shape} does not match image {image.data.shape}")
    return Mask(mask)


def cmd_lift(args):
    image = fileio.read_image(args.input)
    cfg = _load_config(args)
    if args.check_equivariance and cfg.num_orientations % 4 != 0:
        raise ValueError(
            f"equivariance check needs 4 | num_orientations, got {cfg.num_orientations}")
    wavelets = _wavelets(cfg, image)
    volume = lift(image, wavelets)
    fileio.write_volume(args.output, volume)
    k, h, w = volume.data.shape
    print(f"lifted {w}x{h} image to {w}x{h}x{k} volume "
          f"(dtheta={volume.dtheta:.6g}, kernel={wavelets.size})")
    if args.check_equivariance:
        quarter = cfg.num_orientations // 4
        rotated = lift(Image(np.rot90(image.data, -1).copy()), wavelets)
        expected = np.stack([np.rot90(volume.data[(k_ - quarter) % cfg.num_orientations], -1)
                             for k_ in range(cfg.num_orientations)])
        scale = float(np.abs(volume.data).max()) or 1.0
        residual = float(np.abs(rotated.data - expected).max()) / scale
        print(f"rotation equivariance residual: {residual:.3e}")
        if residual > 1e-3:
            print("equivariance check failed", file=sys.stderr)
            return 1
    return 0


def cmd_project(args):
    volume = fileio.read_volume(args.input)
    image = project(volume)
    fileio.write_image(args.output, image)
    k, h, w = volume.data.shape
    print(f"projected {w}x{h}x{k} volume to {w}x{h} image")
    return 0


def cmd_denoise(args):
    image = fileio.read_image(args.input)
    cfg = _load_config(args)
    params = to_rds_params(cfg)
    wavelets = _wavelets(cfg, image)

    truth = fileio.read_image(args.ground_truth) if args.ground_truth else None
    lifted = lift(image, wavelets)
    rows = []
    marks = []
    if truth is not None and cfg.checkpoints > 0:
        marks = list(np.linspace(0.0, cfg.time, cfg.checkpoints + 1)[1:])

    def observer(t, volume):
        if marks and t >= marks[0] - 1e-9:
            while marks and t >= marks[0] - 1e-9:
                marks.pop(0)
            rows.append((t, psnr(project(volume), truth, peak=1.0)))

    if truth is not None:
        rows.append((0.0, psnr(project(lifted), truth, peak=1.0)))
    _, out = run_rds(lifted, params, cfg.time,
                     observer=observer if truth is not None else None)
    fileio.write_image(args.output, out)
    for t, value in rows:
        print(f"t={t:.4g} psnr_db={value:.4f}")
    if args.curve and rows:
        fileio.write_curve(args.curve, rows)
    return 0


def cmd_inpaint(args):
    image = fileio.read_image(args.input)
    cfg = _load_config(args)
    mask = _read_mask(args.mask, image)
    if not mask.data.any():
        fileio.write_image(args.output, image)
        print("mask is empty; output equals input")
        return 0
    params = to_rds_params(cfg)
    wavelets = _wavelets(cfg, image)
    _, out = run_rds(image, params, cfg.time, mask=mask, wavelets=wavelets)
    fileio.write_image(args.output, out)
    print(f"inpainted {int(mask.data.sum())} pixels over t={cfg.time:.4g}")
    if args.baseline_output:
        base = run_rds2d(image, Rds2dParams(lam=cfg.lam, nu=cfg.nu), cfg.time, mask=mask)
        fileio.write_image(args.baseline_output, base)
    return 0


def cmd_compare(args):
    image = fileio.read_image(args.input)
    cfg = _load_config(args)
    mask = _read_mask(args.mask, image) if args.mask else None
    params = to_rds_params(cfg)
    wavelets = _wavelets(cfg, image)
    _, lifted_out = run_rds(image, params, cfg.time, mask=mask, wavelets=wavelets)
    planar_out = run_rds2d(image, Rds2dParams(lam=cfg.lam, nu=cfg.nu), cfg.time, mask=mask)
    fileio.write_image(args.output, lifted_out)
    fileio.write_image(args.baseline_output, planar_out)
    if args.ground_truth:
        truth = fileio.read_image(args.ground_truth)
        print(f"m2 psnr_db={psnr(lifted_out, truth, peak=1.0):.4f}")
        print(f"r2 psnr_db={psnr(planar_out, truth, peak=1.0):.4f}")
    return 0


def cmd_fixtures(args):
    cfg = _load_config(args)
    out = args.output_dir.rstrip("/")
    os.makedirs(out, exist_ok=True)
    if args.kind == "crossing":
        fx = crossing_fixture(size=args.size)
        fileio.write_image(f"{out}/crossing_clean.png", fx.clean)
        fileio.write_image(f"{out}/crossing_degraded.png", fx.degraded)
        fileio.write_image(f"{out}/crossing_mask.png", Image(fx.mask.data.astype(float)))
        print(f"wrote crossing fixture (size={args.size}, hole={2 * fx.hole_half:.0f}px)")
    elif args.kind == "circle":
        fileio.write_image(f"{out}/circle.png", circle_fixture(size=args.size, radius=args.radius))
        print(f"wrote circle fixture (size={args.size}, radius={args.radius})")
    elif args.kind == "ridge":
        angle = math.radians(args.angle)
        fileio.write_image(f"{out}/ridge.png", ridge_fixture(size=args.size, angle=angle))
        print(f"wrote ridge fixture (size={args.size}, angle={args.angle} deg)")
    elif args.kind == "spiral":
        fileio.write_image(f"{out}/spiral.png", spiral_fixture(size=args.size))
        print(f"wrote spiral fixture (size={args.size})")
    elif args.kind == "noise":
        field = noise_fixture(size=args.size, sigma=args.noise_sigma,
                              rho=args.noise_rho, seed=cfg.seed)
        fileio.write_image(f"{out}/noise.png", Image(0.5 + field.data))
        print(f"wrote noise fixture (size={args.size}, sigma={args.noise_sigma}, "
              f"rho={args.noise_rho}, seed={cfg.seed})")
    else:
        raise ValueError(f"unknown fixture kind {args.kind!r}")
    return 0


def cmd_gauge_diag(args):
    image = fileio.read_image(args.input)
    cfg = _load_config(args)
    volume = lift(image, _wavelets(cfg, image))
    frame = fit_gauge_frame(volume, cfg.xi, reg_sigma=cfg.gauge_sigma,
                            degeneracy_tol=cfg.degeneracy_tol)
    residual = frame.orthonormality_residual()
    print(f"orthonormality residual: {residual:.3e}")
    print(f"fallback fraction: {frame.fallback_fraction:.4f}")
    if args.expect_radius is not None:
        kappa = implied_curvature(frame)
        ridge = volume.data >= 0.5 * float(volume.data.max())
        measured = float(np.median(np.abs(kappa[ridge])))
        expected = 1.0 / args.expect_radius
        rel = abs(measured - expected) / expected
        print(f"median |curvature| at ridge voxels: {measured:.5f} "
              f"(expected {expected:.5f}, rel. err. {rel:.3f})")
        if rel > 0.2:
            print("curvature check failed", file=sys.stderr)
            return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orientrds",
        description="Crossing-preserving diffusion-shock filtering on lifted images.")
    sub = parser.add_subparsers(dest="command", required=True)

    def job_command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value config file")
        _add_config_flags(p)
        p.set_defaults(func=func)
        return p

    p = job_command("lift", cmd_lift, "lift an image to an orientation volume")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--check-equivariance", action="store_true",
                   help="verify 90-degree rotation equivariance (needs 4 | K)")

    p = sub.add_parser("project", help="project a volume back to an image")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_project)

    p = job_command("denoise", cmd_denoise, "lift, evolve, and project an image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--ground-truth", help="clean reference for PSNR reporting")
    p.add_argument("--curve", help="write t,psnr_db checkpoints as CSV")

    p = job_command("inpaint", cmd_inpaint, "evolve only masked pixels")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mask", required=True,
                   help="PNG mask; white pixels are inpainted")
    p.add_argument("--baseline-output", help="also write the planar baseline result")

    p = job_command("compare", cmd_compare, "run lifted and planar pipelines side by side")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("baseline_output")
    p.add_argument("--mask", help="optional inpainting mask")
    p.add_argument("--ground-truth", help="clean reference for PSNR reporting")

    p = job_command("fixtures", cmd_fixtures, "generate synthetic test images")
    p.add_argument("kind", choices=["crossing", "circle", "ridge", "spiral", "noise"])
    p.add_argument("output_dir")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--radius", type=float, default=20.0)
    p.add_argument("--angle", type=float, default=0.0, help="ridge angle in degrees")
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--noise-rho", type=float, default=2.0)

    p = job_command("gauge-diag", cmd_gauge_diag, "report gauge-frame diagnostics")
    p.add_argument("input")
    p.add_argument("--expect-radius", type=float,
                   help="check implied ridge curvature against 1/radius")

    return parser


def _check_thread_cap():
    raw = os.environ.get("ORIENT_RDS_THREADS")
    if raw is not None and (not raw.isdigit() or int(raw) < 1):
        raise ValueError(
            f"ORIENT_RDS_THREADS must be a positive integer, got {raw!r}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _check_thread_cap()
        return args.func(args)
    except NumericalInstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
