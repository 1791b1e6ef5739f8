"""Bundled case-study parameters.

The rainfall fixture carries the published ten-station summer-rainfall
portfolio: fitted means and edge dependences on the correlation spanning
tree, and per-station generalized Pareto severities for the threshold
exceedances.
"""

from __future__ import annotations

import json
from importlib import resources

from .mrf import MpmrfParams
from .severity import Gpd
from .trees import Tree, build_tree

__all__ = ["rainfall_model"]


def rainfall_model() -> dict:
    """Load the ten-station rainfall portfolio.

    Returns a dict with keys ``tree`` (Tree), ``params`` (MpmrfParams),
    ``gpds`` (list of Gpd, station order), and ``h`` (lattice step, mm).
    """
    text = resources.files("mpmrf.data").joinpath("rainfall_ns.json").read_text()
    obj = json.loads(text)
    tree = build_tree(obj["num_stations"], [(e["u"], e["v"]) for e in obj["tree_edges"]])
    params = MpmrfParams(
        lam=obj["lambda"],
        alpha={(e["u"], e["v"]): e["value"] for e in obj["alpha"]},
    )
    gpds = [Gpd(xi=g["xi"], sigma=g["sigma"], u=g["u"]) for g in obj["gpd"]]
    return {"tree": tree, "params": params, "gpds": gpds, "h": obj["h"]}
