"""Planar dielectric stackups.

Layers are ordered bottom to top. Interface ``i`` separates layer ``i``
(below) from layer ``i + 1`` (above). The two outermost layers are
unbounded; either may be closed by a perfect-conductor plane placed inside
it.
"""
from dataclasses import dataclass, field
import hashlib
import json
import math

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class DielectricLayer:
    """One homogeneous layer.

    Parameters
    ----------
    eps : float
        Relative permittivity (> 0).
    thickness : float
        Thickness in µm; ``math.inf`` for the outermost layers.
    """

    eps: float
    thickness: float = math.inf

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigError(f"layer permittivity must be positive and finite, got {self.eps!r}")
        if not (self.thickness > 0):
            raise ConfigError(f"layer thickness must be positive, got {self.thickness!r}")


@dataclass(frozen=True)
class Stackup:
    """Ordered list of layers with optional perfect-conductor boundaries.

    Parameters
    ----------
    layers : tuple of DielectricLayer
        Bottom to top; at least two layers. Only the first and last layer
        may be unbounded, and they must be.
    z0 : float
        z coordinate of the lowest interface in µm.
    bottom_pec : float or None
        z of a perfect-conductor plane below all interfaces.
    top_pec : float or None
        z of a perfect-conductor plane above all interfaces.
    """

    layers: tuple
    z0: float = 0.0
    bottom_pec: float = None
    top_pec: float = None
    interface_z: tuple = field(init=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(layers) < 2:
            raise ConfigError("a stackup needs at least two layers (sources live on interfaces)")
        for i, lay in enumerate(layers[1:-1], start=1):
            if not math.isfinite(lay.thickness):
                raise ConfigError(f"interior layer {i} must have finite thickness")
        for i in (0, len(layers) - 1):
            if math.isfinite(layers[i].thickness):
                raise ConfigError(f"outermost layer {i} must be unbounded; use a PEC plane to close it")
        zs = [float(self.z0)]
        for lay in layers[1:-1]:
            zs.append(zs[-1] + lay.thickness)
        object.__setattr__(self, "interface_z", tuple(zs))
        if self.bottom_pec is not None and not (self.bottom_pec < zs[0]):
            raise ConfigError(f"bottom PEC at z={self.bottom_pec} must lie strictly below z={zs[0]}")
        if self.top_pec is not None and not (self.top_pec > zs[-1]):
            raise ConfigError(f"top PEC at z={self.top_pec} must lie strictly above z={zs[-1]}")

    # -- construction helpers -------------------------------------------------
    @classmethod
    def two_layer(cls, eps_below, eps_above, z0=0.0):
        """Two half spaces meeting at ``z0``."""
        return cls((DielectricLayer(eps_below), DielectricLayer(eps_above)), z0=z0)

    @classmethod
    def substrate_over_pec(cls, eps_sub, h, eps_above=1.0, z0=0.0):
        """Substrate of thickness ``h`` on a ground plane, open above.

        The conductors sit on the substrate top at ``z0``.
        """
        return cls((DielectricLayer(eps_sub), DielectricLayer(eps_above)), z0=z0, bottom_pec=z0 - h)

    # -- derived quantities ---------------------------------------------------
    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def n_interfaces(self):
        return len(self.layers) - 1

    @property
    def eps(self):
        return np.array([lay.eps for lay in self.layers])

    @property
    def has_pec(self):
        return self.bottom_pec is not None or self.top_pec is not None

    def eps_eff(self, interface):
        """Effective permittivity (eps_below + eps_above)/2 at an interface."""
        self.check_interface(interface)
        return 0.5 * (self.layers[interface].eps + self.layers[interface + 1].eps)

    def check_interface(self, interface):
        if not (0 <= int(interface) < self.n_interfaces):
            raise ConfigError(f"interface index {interface} out of range 0..{self.n_interfaces - 1}")
        return int(interface)

    def layer_bounds(self):
        """(bottom, top) z of every layer; PEC planes bound the outer layers."""
        zs = self.interface_z
        lo = [-math.inf if self.bottom_pec is None else self.bottom_pec] + list(zs)
        hi = list(zs) + [math.inf if self.top_pec is None else self.top_pec]
        return np.array(lo), np.array(hi)

    def layer_of(self, z, side=None):
        """Index of the layer containing ``z``.

        Parameters
        ----------
        z : float
        side : {"below", "above", None}
            Which layer to report when ``z`` sits exactly on an interface.
        """
        zs = self.interface_z
        for i, zi in enumerate(zs):
            if z == zi:
                if side == "above":
                    return i + 1
                if side == "below":
                    return i
                raise ConfigError(f"z={z} lies on interface {i}; pass side")
            if z < zi:
                return i
        return len(zs)

    def is_reflectionless(self):
        """True when every layer has the same permittivity and no PEC exists.

        Also true for two open half spaces: a source on their interface sees
        the exact image solution, so the scattered part vanishes.
        """
        if self.has_pec:
            return False
        return self.n_layers == 2 or bool(np.all(self.eps == self.eps[0]))

    def reflection_length(self, interface):
        """Shortest round-trip distance from an interface to any reflector."""
        z = self.interface_z[interface]
        d = [abs(z - zz) for i, zz in enumerate(self.interface_z) if i != interface]
        if self.bottom_pec is not None:
            d.append(z - self.bottom_pec)
        if self.top_pec is not None:
            d.append(self.top_pec - z)
        return 2.0 * min(d) if d else math.inf

    # -- serialization --------------------------------------------------------
    def to_dict(self):
        lay = [{"eps": l.eps, "thickness": ("inf" if math.isinf(l.thickness) else l.thickness)}
               for l in self.layers]
        return {
            "layers": lay,
            "z0": self.z0,
            "bottom_boundary": "open" if self.bottom_pec is None else {"pec_at": self.bottom_pec},
            "top_boundary": "open" if self.top_pec is None else {"pec_at": self.top_pec},
        }

    @classmethod
    def from_dict(cls, d):
        try:
            layers = []
            for item in d["layers"]:
                t = item.get("thickness", "inf")
                t = math.inf if (t == "inf" or t is None) else float(t)
                layers.append(DielectricLayer(float(item["eps"]), t))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad stackup layers: {exc}") from exc

        def pec(key):
            v = d.get(key, "open")
            if v in (None, "open"):
                return None
            if isinstance(v, dict) and "pec_at" in v:
                return float(v["pec_at"])
            raise ConfigError(f"{key} must be 'open' or {{'pec_at': z}}, got {v!r}")

        return cls(tuple(layers), z0=float(d.get("z0", 0.0)), bottom_pec=pec("bottom_boundary"),
                   top_pec=pec("top_boundary"))

    def digest(self):
        """Short stable hash identifying the stackup (used by table files)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
