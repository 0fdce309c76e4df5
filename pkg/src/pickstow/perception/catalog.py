"""Item catalog: 40 warehouse items approximated by coloured primitives.

Dimensions are in metres (full box extents, cylinder radius/height, sphere
radius). Colours are given as HSV so hues stay spread over the wheel.
"""
from __future__ import annotations

import colorsys
from dataclasses import dataclass, replace

import numpy as np

from ..geometry import make_transform, rot_z
from .scene import SceneObject


@dataclass(frozen=True)
class CatalogItem:
    id: str
    shape: str
    dims: tuple[float, ...]
    hsv: tuple[float, float, float]
    deformable: bool = False

    @property
    def color(self) -> tuple[float, float, float]:
        h, s, v = self.hsv
        return colorsys.hsv_to_rgb(h / 360.0, s, v)

    def resting_half_height(self) -> float:
        if self.shape == "box":
            return self.dims[2] / 2
        if self.shape == "cylinder":
            return self.dims[1] / 2
        return self.dims[0]

    def footprint_half_depth(self) -> float:
        """Half extent along the bin depth axis when placed upright, unrotated."""
        if self.shape == "box":
            return self.dims[0] / 2
        return self.dims[0]

    def lying_flat(self) -> "CatalogItem":
        """The same item resting on its largest face (boxes only)."""
        if self.shape != "box":
            return self
        return replace(self, dims=tuple(sorted(self.dims, reverse=True)))

    def make(self, pose) -> SceneObject:
        return SceneObject(self.id, self.shape, self.dims, pose, self.color, self.deformable)


_ITEMS = [
    # id, shape, dims, (hue deg, sat, val), deformable
    ("barkely_hide_bones", "box", (0.06, 0.14, 0.08), (30, 0.8, 0.9), False),
    ("cherokee_easy_tee_shirt", "box", (0.05, 0.16, 0.10), (210, 0.7, 0.8), True),
    ("clorox_utility_brush", "box", (0.05, 0.12, 0.09), (120, 0.8, 0.7), False),
    ("cloud_b_plush_bear", "sphere", (0.055,), (20, 0.6, 0.6), True),
    ("command_hooks", "box", (0.04, 0.10, 0.12), (240, 0.8, 0.9), False),
    ("cool_shot_glue_sticks", "box", (0.04, 0.09, 0.11), (300, 0.7, 0.9), False),
    ("crayola_24_ct", "box", (0.04, 0.12, 0.10), (55, 0.9, 0.95), False),
    ("creativity_chenille_stems", "box", (0.04, 0.10, 0.14), (330, 0.8, 0.9), True),
    ("dasani_water_bottle", "cylinder", (0.035, 0.14), (195, 0.8, 0.9), False),
    ("dove_beauty_bar", "box", (0.04, 0.10, 0.07), (200, 0.3, 0.95), False),
    ("dr_browns_bottle_brush", "box", (0.04, 0.09, 0.13), (180, 0.7, 0.7), False),
    ("easter_turtle_sippy_cup", "cylinder", (0.04, 0.11), (90, 0.8, 0.8), False),
    ("elmers_washable_no_run_school_glue", "cylinder", (0.025, 0.13), (45, 0.9, 0.9), False),
    ("expo_dry_erase_board_eraser", "box", (0.04, 0.13, 0.06), (5, 0.9, 0.8), False),
    ("fiskars_scissors_red", "box", (0.03, 0.09, 0.13), (355, 0.9, 0.85), False),
    ("fitness_gear_3lb_dumbbell", "cylinder", (0.035, 0.12), (280, 0.7, 0.6), False),
    ("folgers_classic_roast_coffee", "cylinder", (0.05, 0.13), (15, 0.9, 0.7), False),
    ("hanes_tube_socks", "box", (0.05, 0.12, 0.10), (0, 0.0, 0.95), True),
    ("i_am_a_bunny_book", "box", (0.03, 0.14, 0.12), (100, 0.6, 0.9), False),
    ("jane_eyre_dvd", "box", (0.02, 0.13, 0.15), (260, 0.5, 0.5), False),
    ("kleenex_paper_towels", "cylinder", (0.055, 0.12), (160, 0.4, 0.95), True),
    ("kleenex_tissue_box", "box", (0.08, 0.12, 0.10), (170, 0.8, 0.8), False),
    ("kyjen_squeakin_eggs_plush_puppies", "box", (0.06, 0.12, 0.10), (320, 0.5, 0.9), True),
    ("laugh_out_loud_joke_book", "box", (0.02, 0.11, 0.15), (65, 0.7, 0.8), False),
    ("oral_b_toothbrush_green", "box", (0.03, 0.06, 0.15), (135, 0.9, 0.8), False),
    ("oral_b_toothbrush_red", "box", (0.03, 0.06, 0.15), (350, 0.7, 0.7), False),
    ("peva_shower_curtain_liner", "box", (0.04, 0.13, 0.12), (220, 0.3, 0.9), True),
    ("platinum_pets_dog_bowl", "cylinder", (0.065, 0.05), (190, 0.9, 0.6), False),
    ("rawlings_baseball", "sphere", (0.037,), (40, 0.3, 0.95), False),
    ("rolodex_jumbo_pencil_cup", "cylinder", (0.045, 0.12), (0, 0.0, 0.25), False),
    ("safety_first_outlet_plugs", "box", (0.03, 0.10, 0.13), (75, 0.8, 0.7), False),
    ("scotch_bubble_mailer", "box", (0.02, 0.15, 0.16), (50, 0.5, 0.85), True),
    ("scotch_duct_tape", "cylinder", (0.05, 0.05), (0, 0.0, 0.7), False),
    ("soft_white_lightbulb", "box", (0.07, 0.07, 0.12), (60, 0.3, 0.95), False),
    ("staples_index_cards", "box", (0.03, 0.13, 0.08), (230, 0.9, 0.6), False),
    ("ticonderoga_12_pencils", "box", (0.02, 0.07, 0.15), (50, 1.0, 0.9), False),
    ("up_glucose_bottle", "cylinder", (0.03, 0.12), (10, 0.5, 0.95), False),
    ("womens_knit_gloves", "box", (0.04, 0.10, 0.14), (290, 0.5, 0.8), True),
    ("woods_extension_cord", "cylinder", (0.045, 0.06), (110, 0.9, 0.5), False),
    ("cheezit_big_original", "box", (0.06, 0.15, 0.15), (25, 1.0, 0.85), False),
]

CATALOG: dict[str, CatalogItem] = {
    name: CatalogItem(name, shape, tuple(dims), hsv, deformable)
    for name, shape, dims, hsv, deformable in _ITEMS
}
ITEM_IDS = tuple(CATALOG)


def get_item(item_id: str) -> CatalogItem:
    try:
        return CATALOG[item_id]
    except KeyError:
        raise KeyError(f"unknown catalog item {item_id!r}") from None


def place_in_bin(item: CatalogItem, bin_frame: np.ndarray, bin_size, depth: float = 0.09,
                 lateral: float = 0.0, yaw: float = 0.0) -> SceneObject:
    """Put an item upright on a bin floor.

    ``bin_frame`` is the bin's face-centre frame (x into the bin, z up) and
    ``bin_size`` its interior (depth, width, height). ``depth`` is the
    distance from the face to the item's centre.
    """
    _, _, height = bin_size
    z = -height / 2 + item.resting_half_height()
    local = make_transform(rot_z(yaw), (depth, lateral, z))
    return item.make(bin_frame @ local)


def place_in_tote(item: CatalogItem, tote_frame: np.ndarray, x: float = 0.0, y: float = 0.0,
                  yaw: float = 0.0, z_base: float = 0.0) -> SceneObject:
    """Put an item upright on the tote floor (tote frame: z up, origin on the floor)."""
    local = make_transform(rot_z(yaw), (x, y, z_base + item.resting_half_height()))
    return item.make(tote_frame @ local)
