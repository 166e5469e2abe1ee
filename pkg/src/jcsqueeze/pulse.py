"""Gaussian pulse trains driving the two-level system."""
from __future__ import annotations

from dataclasses import dataclass
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidArgument


def calibrate_pi_amplitude(sigma: float, omegap: float = 100.0) -> float:
    """Peak amplitude giving a pi rotation under the rotating-wave approximation.

    The rotation angle of one pulse is ``amp * sigma * sqrt(2 pi)``; setting it
    to pi gives ``sqrt(pi/2) / sigma``. ``omegap`` does not enter at this order.
    """
    if not sigma > 0:
        raise InvalidArgument(f"sigma must be > 0, got {sigma}")
    return math.sqrt(math.pi / 2.0) / sigma


@dataclass(frozen=True)
class PulseTrain:
    centers: tuple = ()
    sigma: float = 0.05
    omega0_amp: float | None = None
    omegap: float = 100.0
    window: tuple = (0.0, 10.0)

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if not self.sigma > 0:
            raise InvalidArgument(f"sigma must be > 0, got {self.sigma}")
        lo, hi = self.window
        if not lo < hi:
            raise InvalidArgument(f"window must satisfy start < end, got {self.window}")
        bad = [c for c in self.centers if not lo <= c <= hi]
        if bad:
            raise InvalidArgument(f"pulse centers {bad} fall outside the window [{lo}, {hi}]")
        if self.omega0_amp is None:
            object.__setattr__(self, "omega0_amp", calibrate_pi_amplitude(self.sigma, self.omegap))

    @property
    def sorted_centers(self) -> tuple:
        return tuple(sorted(self.centers))

    def __len__(self):
        return len(self.centers)

    def with_centers(self, centers) -> "PulseTrain":
        return PulseTrain(tuple(centers), self.sigma, self.omega0_amp, self.omegap, self.window)

    def envelope(self, t):
        """Sum of Gaussian envelopes (carrier stripped, unit peak per pulse)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in self.centers:
            out += np.exp(-0.5 * ((t - c) / self.sigma) ** 2)
        return out

    def to_dict(self) -> dict:
        return {
            "centers": list(self.centers),
            "g_sigma": self.sigma,
            "omega0_amp": self.omega0_amp,
            "omega_p": self.omegap,
            "window": list(self.window),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PulseTrain":
        try:
            centers = doc["centers"]
            sigma = doc["g_sigma"]
        except KeyError as exc:
            raise InvalidArgument(f"pulse document missing field {exc}") from None
        return cls(tuple(centers), float(sigma), doc.get("omega0_amp"),
                   float(doc.get("omega_p", 100.0)), tuple(doc.get("window", (0.0, 10.0))))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "PulseTrain":
        return cls.from_dict(json.loads(Path(path).read_text()))


def drive_amplitude(train: PulseTrain, t):
    """Total drive sum_i amp * exp(-(t - t_i)^2 / 2 sigma^2) * cos(omegap t).

    Gaussians are evaluated exactly, with no support cutoff.
    """
    t = np.asarray(t, dtype=float)
    out = train.omega0_amp * train.envelope(t) * np.cos(train.omegap * t)
    return float(out) if out.ndim == 0 else out
