"""Scene-set writer: a directory tree of scenes, dumps, and ground truth.

Layout under the output root:

    scene_000/
      image.png              rendered scene
      gt.json                this scene's ground truth
      dump/                  tensor files + manifest for the consumer
    ...
    gt_all.json              merged ground truth across all scenes

One rng drives every scene in order, so a (seed, parameters) pair fully
determines every emitted byte.
"""

import json
import os

import numpy as np
from PIL import Image

from .netout import export_pseudo_outputs
from .scenes import generate_scene, render_scene_image, scene_gt


def write_scene_set(
    out_dir,
    seed: int,
    count: int,
    size: int = 128,
    num_classes: int = 5,
    k: int = 8,
    noise_level: float = 0.0,
    overlap_prob: float = 0.3,
    min_instances: int = 1,
    max_instances: int = 4,
) -> dict:
    """Generate count scenes; returns a summary dict of what was written."""
    if max_instances > k:
        raise ValueError(f"max_instances {max_instances} exceeds k {k}")
    rng = np.random.default_rng(seed)
    os.makedirs(out_dir, exist_ok=True)
    all_images, all_annotations = [], []
    ann_id = 1
    scene_dirs = []
    for index in range(count):
        image_id = f"scene_{index:03d}"
        n_inst = int(rng.integers(min_instances, max_instances + 1))
        scene = generate_scene(rng, image_id, size, n_inst, num_classes, overlap_prob)
        scene_dir = os.path.join(out_dir, image_id)
        os.makedirs(scene_dir, exist_ok=True)

        Image.fromarray(render_scene_image(scene), mode="RGB").save(
            os.path.join(scene_dir, "image.png"), format="PNG"
        )
        gt = scene_gt(scene, first_ann_id=ann_id)
        ann_id += len(gt["annotations"])
        with open(os.path.join(scene_dir, "gt.json"), "w", encoding="utf-8") as fh:
            json.dump(gt, fh, indent=1, sort_keys=True)
            fh.write("\n")
        export_pseudo_outputs(
            scene, k, noise_level, rng, os.path.join(scene_dir, "dump")
        )
        all_images.extend(gt["images"])
        all_annotations.extend(gt["annotations"])
        scene_dirs.append(scene_dir)

    merged = {
        "images": all_images,
        "annotations": all_annotations,
        "categories": [{"id": j, "name": f"class_{j}"} for j in range(1, num_classes + 1)],
    }
    with open(os.path.join(out_dir, "gt_all.json"), "w", encoding="utf-8") as fh:
        json.dump(merged, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return {
        "out_dir": str(out_dir),
        "count": count,
        "seed": seed,
        "scene_dirs": scene_dirs,
        "annotations": len(all_annotations),
    }
