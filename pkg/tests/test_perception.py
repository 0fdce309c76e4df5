import numpy as np
import pytest

from pickstow.errors import EmptyRegionError, InvalidDepthError, ItemNotFoundError, NoEvidenceError
from pickstow.geometry import make_transform
from pickstow.perception.catalog import CATALOG, ITEM_IDS, get_item, place_in_bin
from pickstow.perception.features import (GRAY_SLICE, HUE_SLICE, N_FEATURES, SHAPE_SLICE,
                                          extract_features, window_features, window_indices)
from pickstow.perception.forest import best_split, grow_tree, train_forest
from pickstow.perception.normals import estimate_normals, has_normal
from pickstow.perception.pipeline import (Detection, classify_pixels, detect_stub,
                                          mean_shift_mode, suction_target, support_region)
from pickstow.perception.scene import (LABEL_NONE, LABEL_RACK, CameraModel, PointCloud,
                                       RenderSettings, SceneDescription, SceneObject,
                                       read_pgm, render_bin_cloud, render_cloud,
                                       surface_query, write_pgm)
from pickstow.perception.training import BACKGROUND, train_item_forest
from oracles import kde_argmax, ray_hits_box

NOISELESS = RenderSettings(noise_sigma_m=0.0)
EYE = np.eye(4)  # camera at the origin looking along +z


def sphere(center, r=0.05, color=(0.9, 0.1, 0.1), id_="ball"):
    return SceneObject(id_, "sphere", (r,), make_transform(np.eye(3), center), color)


def box(center, dims, color=(0.1, 0.2, 0.9), id_="crate"):
    return SceneObject(id_, "box", dims, make_transform(np.eye(3), center), color)


def angle_deg(a, b):
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    b = b / np.linalg.norm(b, axis=-1, keepdims=True)
    return np.degrees(np.arccos(np.clip(np.sum(a * b, axis=-1), -1, 1)))


def blob(center, sigma, shape=(100, 100), peak=1.0):
    vv, uu = np.mgrid[:shape[0], :shape[1]]
    return peak * np.exp(-((uu - center[0]) ** 2 + (vv - center[1]) ** 2) / (2 * sigma ** 2))


# -- rendering ----------------------------------------------------------------


def test_empty_bin_only_rack(workcell):
    cloud = render_bin_cloud(workcell.rack, 4, [], settings=NOISELESS)
    hit = cloud.valid
    assert hit.any()
    assert set(np.unique(cloud.labels[hit])) == {LABEL_RACK}
    assert np.all(cloud.labels[~hit] == LABEL_NONE)
    assert np.all(np.isnan(cloud.points[~hit]))


def test_sphere_points_on_surface():
    s = sphere((0.02, -0.01, 0.5))
    cloud = render_cloud([s], [], EYE, NOISELESS)
    pts = cloud.points[cloud.labels == 0]
    assert len(pts) > 50
    np.testing.assert_allclose(np.linalg.norm(pts - s.center, axis=1), 0.05, atol=1e-9)


def test_occlusion_matches_ray_oracle():
    ball = sphere((0.0, 0.0, 0.6), r=0.08)
    blocker = box((0.03, 0.02, 0.4), (0.06, 0.05, 0.04))
    cloud = render_cloud([ball, blocker], [], EYE, NOISELESS)
    dirs = CameraModel().ray_directions()
    lo, hi = blocker.aabb().lo, blocker.aabb().hi
    blocked = 0
    for i, d in enumerate(dirs):
        t = ray_hits_box(np.zeros(3), d, np.asarray(lo), np.asarray(hi))
        if t is None:
            continue
        blocked += 1
        assert cloud.labels[i] == 1
        assert np.linalg.norm(cloud.points[i]) == pytest.approx(t, abs=1e-9)
    assert blocked > 20
    assert np.sum(cloud.labels == 0) > 0


def test_noise_and_color_jitter_are_seeded():
    s = sphere((0, 0, 0.5))
    settings = RenderSettings(noise_sigma_m=0.002, color_jitter=0.05)
    a = render_cloud([s], [], EYE, settings, np.random.default_rng(1))
    b = render_cloud([s], [], EYE, settings, np.random.default_rng(1))
    np.testing.assert_array_equal(a.points, b.points)
    r = np.linalg.norm(a.points[a.labels == 0] - s.center, axis=1)
    assert 0.0005 < np.std(r - 0.05) < 0.004


def test_cloud_ascii_roundtrip():
    cloud = render_cloud([sphere((0, 0, 0.5))], [], EYE, NOISELESS)
    back = PointCloud.from_ascii(cloud.to_ascii())
    assert back.organized_shape == cloud.organized_shape
    np.testing.assert_array_equal(back.valid, cloud.valid)
    np.testing.assert_allclose(back.points[back.valid], cloud.points[cloud.valid], rtol=1e-5)


def test_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((4, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        PointCloud(np.zeros((4, 3)), np.zeros((4, 3)), (3, 3))
    with pytest.raises(ValueError):
        SceneObject("x", "box", (0.1, 0.1, -0.1), EYE, (1, 1, 1))


def test_scene_description_roundtrip(tmp_path):
    desc = SceneDescription((sphere((0, 0, 0.5)), box((0.1, 0, 0.5), (0.1, 0.2, 0.3))),
                            camera_pose=EYE, noise_sigma_m=0.001)
    desc.save(tmp_path / "s.json")
    back = SceneDescription.load(tmp_path / "s.json")
    assert [o.id for o in back.objects] == ["ball", "crate"]
    assert back.objects[1].dims == (0.1, 0.2, 0.3)
    np.testing.assert_array_equal(back.camera_pose, EYE)


def test_pgm_roundtrip(tmp_path):
    img = np.linspace(0, 1, 12).reshape(3, 4)
    write_pgm(img, tmp_path / "p.pgm")
    np.testing.assert_allclose(read_pgm(tmp_path / "p.pgm"), img, atol=1 / 255)


def test_surface_query_examples():
    b = box((0, 0, 0), (0.2, 0.2, 0.2))
    q = surface_query(b, [[0.0, 0.0, 0.2], [0.0, 0.0, 0.05]])
    np.testing.assert_allclose(q.distance, [0.1, 0.05])
    np.testing.assert_allclose(q.normal[0], [0, 0, 1])
    c = SceneObject("c", "cylinder", (0.05, 0.2), EYE, (1, 0, 0))
    assert surface_query(c, [[0.1, 0, 0]]).distance[0] == pytest.approx(0.05)


# -- detector stub ------------------------------------------------------------


def _scene(rng):
    objs = [sphere((rng.uniform(-0.1, 0.1), rng.uniform(-0.08, 0.08), 0.5),
                   r=rng.uniform(0.02, 0.05)),
            box((rng.uniform(-0.1, 0.1), rng.uniform(-0.08, 0.08), 0.6), (0.05, 0.08, 0.05))]
    return objs, render_cloud(objs, [], EYE, NOISELESS)


def _silhouette(cloud, label):
    vs, us = np.nonzero(cloud.image(cloud.labels) == label)
    return us.min(), vs.min(), us.max(), vs.max()


def test_detect_exact_box():
    objs, cloud = _scene(np.random.default_rng(0))
    det = detect_stub(cloud, objs, "ball")
    assert det.box == tuple(float(v) for v in _silhouette(cloud, 0))
    assert 0.7 <= det.score <= 1.0


def test_detect_inflation_contains_silhouette():
    rng = np.random.default_rng(1)
    for _ in range(100):
        objs, cloud = _scene(rng)
        if not np.any(cloud.labels == 0):
            continue
        tight = detect_stub(cloud, objs, "ball")
        loose = detect_stub(cloud, objs, "ball", inflation=0.25)
        assert loose.area >= tight.area
        u0, v0, u1, v1 = loose.box
        s0, t0, s1, t1 = _silhouette(cloud, 0)
        assert u0 <= s0 and v0 <= t0 and u1 >= s1 and v1 >= t1


def test_detect_jitter_stays_in_bounds():
    objs, cloud = _scene(np.random.default_rng(2))
    rng = np.random.default_rng(3)
    for _ in range(50):
        u0, v0, u1, v1 = detect_stub(cloud, objs, "ball", 0.5, 5.0, rng).box
        assert 0 <= u0 <= u1 <= cloud.width - 1 and 0 <= v0 <= v1 <= cloud.height - 1


def test_detect_missing_item():
    objs, cloud = _scene(np.random.default_rng(0))
    with pytest.raises(ItemNotFoundError):
        detect_stub(cloud, objs, "unicorn")


def test_detect_most_visible_instance():
    objs = [sphere((0.05, 0, 0.5), r=0.01), sphere((-0.05, 0, 0.5), r=0.04)]
    cloud = render_cloud(objs, [], EYE, NOISELESS)
    det = detect_stub(cloud, objs, "ball")
    assert det.box == tuple(float(v) for v in _silhouette(cloud, 1))


# -- normals ------------------------------------------------------------------


def test_plane_normals_face_camera():
    wall = box((0, 0, 0.5), (1.0, 1.0, 0.01))
    cloud = render_cloud([wall], [], EYE, NOISELESS)
    n = estimate_normals(cloud, k=12)
    ok = has_normal(n)
    assert ok.sum() == cloud.valid.sum()
    assert angle_deg(n[ok], np.array([0, 0, -1.0])).max() <= 1.0


def test_sphere_normals_radial():
    s = sphere((0, 0, 0.35), r=0.1)
    cam = CameraModel(160, 120)
    cloud = render_cloud([s], [], EYE, RenderSettings(cam, 0.0))
    n = estimate_normals(cloud, k=8)
    idx = np.flatnonzero(cloud.labels == 0)
    radial = cloud.points[idx] - s.center
    # keep away from the rim, where neighbourhoods become one-sided
    facing = angle_deg(radial, -cloud.points[idx]) < 50
    assert angle_deg(n[idx[facing]], radial[facing]).max() <= 1.0


def test_noisy_plane_mean_error():
    wall = box((0, 0, 0.5), (1.0, 1.0, 0.01))
    cloud = render_cloud([wall], [], EYE, RenderSettings(noise_sigma_m=0.002),
                         np.random.default_rng(0))
    n = estimate_normals(cloud, k=20, max_radius=0.05)
    assert angle_deg(n[cloud.valid], np.array([0, 0, -1.0])).mean() <= 5.0


def test_isolated_points_have_no_normal():
    pts = np.array([[0, 0, 1.0], [0.01, 0, 1.0], [5, 5, 5.0], [np.nan] * 3])
    cloud = PointCloud(pts, np.zeros((4, 3)))
    n = estimate_normals(cloud, k=3)
    assert not has_normal(n).any()
    with pytest.raises(ValueError):
        estimate_normals(cloud, k=2)


# -- features -----------------------------------------------------------------


def _render_with_normals(objs, k=12, cam=CameraModel(), radius=0.03):
    cloud = render_cloud(objs, [], EYE, RenderSettings(cam, 0.0))
    return cloud, estimate_normals(cloud, k=k, max_radius=radius)


def _blocks_ok(f):
    assert f.shape == (N_FEATURES,) == (37,)
    for sl in (SHAPE_SLICE, HUE_SLICE, GRAY_SLICE):
        s = f[sl].sum()
        assert s == 0 or abs(s - 1) <= 1e-9


def test_flat_plane_features():
    cloud, n = _render_with_normals([box((0, 0, 0.5), (1.0, 1.0, 0.01), color=(0.9, 0.2, 0.2))])
    f = extract_features(cloud, n, cloud.valid)
    _blocks_ok(f)
    assert f[SHAPE_SLICE][0] == 1.0
    assert np.count_nonzero(f[HUE_SLICE]) == 1


def test_features_order_invariant(rng):
    cloud, n = _render_with_normals([sphere((0, 0, 0.4), r=0.08)])
    perm = rng.permutation(len(cloud))
    shuffled = PointCloud(cloud.points[perm], cloud.colors[perm])
    region = np.flatnonzero(cloud.valid)
    inv = np.argsort(perm)
    a = extract_features(cloud, n, region)
    b = extract_features(shuffled, n[perm], inv[region])
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_features_rigid_invariant(rng):
    from scipy.spatial.transform import Rotation
    cloud, n = _render_with_normals([sphere((0, 0, 0.4), r=0.08)])
    R = Rotation.random(random_state=rng).as_matrix()
    t = rng.uniform(-1, 1, 3)
    moved = PointCloud(cloud.points @ R.T + t, cloud.colors, cloud.organized_shape, t)
    a = extract_features(cloud, n, cloud.valid)
    b = extract_features(moved, n @ R.T, cloud.valid)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_sphere_and_plane_shapes_differ():
    color = (0.2, 0.8, 0.3)
    cam = CameraModel(160, 120)
    cs, ns = _render_with_normals([sphere((0, 0, 0.3), r=0.05, color=color)], k=20, cam=cam)
    cp, npl = _render_with_normals([box((0, 0, 0.3), (0.2, 0.2, 0.01), color=color)], k=20,
                                   cam=cam)
    fs = extract_features(cs, ns, cs.labels == 0, shape_radius=0.05)
    fp = extract_features(cp, npl, cp.labels == 0, shape_radius=0.05)
    assert np.abs(fs[SHAPE_SLICE] - fp[SHAPE_SLICE]).sum() > 0.3
    np.testing.assert_allclose(fs[HUE_SLICE], fp[HUE_SLICE])


def test_empty_region():
    cloud, n = _render_with_normals([sphere((0, 0, 0.4))])
    with pytest.raises(EmptyRegionError):
        extract_features(cloud, n, [])
    with pytest.raises(EmptyRegionError):
        extract_features(cloud, n, np.flatnonzero(~cloud.valid))


def test_achromatic_region_has_empty_hue_block():
    cloud, n = _render_with_normals([box((0, 0, 0.5), (1, 1, 0.01), color=(0.5, 0.5, 0.5))])
    f = extract_features(cloud, n, cloud.valid)
    _blocks_ok(f)
    assert f[HUE_SLICE].sum() == 0 and f[GRAY_SLICE].sum() == pytest.approx(1)


def test_window_features_match_extract(workcell):
    obj = place_in_bin(get_item("command_hooks"), workcell.rack.bin_frame(4),
                       workcell.rack.bin_size(4))
    cloud = render_bin_cloud(workcell.rack, 4, [obj], settings=NOISELESS)
    n = estimate_normals(cloud)
    rng = np.random.default_rng(0)
    px = np.column_stack([rng.integers(0, cloud.width, 40), rng.integers(0, cloud.height, 40)])
    fast = window_features(cloud, n, px)
    idx, inside = window_indices(cloud.width, cloud.height, px, 7)
    for row, (ids, ok) in enumerate(zip(idx, inside)):
        region = ids[ok]
        region = region[cloud.valid[region]]
        if region.size == 0:
            assert not fast[row].any()
            continue
        np.testing.assert_allclose(fast[row], extract_features(cloud, n, region), atol=1e-12)
        _blocks_ok(fast[row])


# -- forest -------------------------------------------------------------------


def separable(rng, n):
    pos = rng.normal(0.0, 1.0, (n, 37))
    neg = rng.normal(0.0, 1.0, (n, 37))
    pos[:, :5] += 3.0
    return pos, neg


def test_forest_training_accuracy():
    pos, neg = separable(np.random.default_rng(0), 200)
    forest = train_forest(pos, neg, tree_count=20, seed=1)
    X = np.vstack([pos, neg])
    y = np.r_[np.ones(200), np.zeros(200)]
    assert np.mean(forest.predict(X) == y) >= 0.99


def test_forest_held_out_accuracy():
    rng = np.random.default_rng(1)
    pos, neg = separable(rng, 200)
    forest = train_forest(pos, neg, tree_count=50, seed=2)
    tp, tn = separable(rng, 250)
    acc = np.mean(np.r_[forest.predict(tp) == 1, forest.predict(tn) == 0])
    assert acc >= 0.95


def test_forest_structure_invariants():
    pos, neg = separable(np.random.default_rng(2), 100)
    forest = train_forest(pos, neg, tree_count=10, max_depth=4, seed=0)
    assert len(forest.trees) == 10
    for t in forest.trees:
        assert t.depth <= 4
        assert np.all((t.value >= 0) & (t.value <= 1))
    p = forest.predict_proba(np.random.default_rng(3).normal(size=(1000, 37)))
    assert np.all((p >= 0) & (p <= 1))


def test_perfect_feature_chosen_at_root():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(200, 37))
    y = (X[:, 17] > 0.3).astype(float)
    tree = grow_tree(X, y, max_depth=1, rng=rng, max_features=None)
    assert tree.feature[0] == 17
    np.testing.assert_array_equal(tree.predict_proba(X), y)


def test_best_split_matches_exhaustive_search():
    rng = np.random.default_rng(5)
    X = rng.integers(0, 6, size=(40, 4)).astype(float)
    y = rng.integers(0, 2, size=40).astype(float)

    def gini(labels):
        return 0.0 if labels.size == 0 else 2 * labels.mean() * (1 - labels.mean())

    best = np.inf
    for f in range(4):
        for thr in np.unique(X[:, f])[:-1]:
            left = X[:, f] <= thr
            g = (left.sum() * gini(y[left]) + (~left).sum() * gini(y[~left])) / y.size
            best = min(best, g)
    imp, f, thr = best_split(X, y, np.arange(4))
    assert imp == pytest.approx(best, abs=1e-12)
    left = X[:, f] <= thr
    assert (left.sum() * gini(y[left]) + (~left).sum() * gini(y[~left])) / y.size \
        == pytest.approx(best, abs=1e-12)


def test_constant_features_yield_no_split():
    assert best_split(np.ones((5, 3)), np.array([0, 1, 0, 1, 1.0]), np.arange(3)) is None


def test_forest_deterministic():
    pos, neg = separable(np.random.default_rng(6), 80)
    probe = np.random.default_rng(7).normal(size=(300, 37))
    a = train_forest(pos, neg, tree_count=8, seed=3).predict_proba(probe)
    b = train_forest(pos, neg, tree_count=8, seed=3).predict_proba(probe)
    c = train_forest(pos, neg, tree_count=8, seed=3, workers=4).predict_proba(probe)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_forest_needs_both_classes():
    with pytest.raises(ValueError):
        train_forest(np.zeros((0, 37)), np.zeros((3, 37)))


# -- classification -----------------------------------------------------------


@pytest.fixture(scope="module")
def hooks_scene(workcell):
    obj = place_in_bin(get_item("command_hooks"), workcell.rack.bin_frame(4),
                       workcell.rack.bin_size(4))
    cloud = render_bin_cloud(workcell.rack, 4, [obj], rng=np.random.default_rng(0))
    return obj, cloud, estimate_normals(cloud)


def test_classify_target_above_wall(perception_models, hooks_scene):
    obj, cloud, normals = hooks_scene
    forest = perception_models.forest("command_hooks")
    roi = Detection("command_hooks", (0, 0, cloud.width - 1, cloud.height - 1), 1.0)
    pmap = classify_pixels(forest, cloud, normals, roi)
    labels = cloud.image(cloud.labels)
    assert pmap.values[labels == 0].mean() > pmap.values[labels == LABEL_RACK].mean() + 0.3
    assert np.all((pmap.values >= 0) & (pmap.values <= 1))
    # pixels without depth are flagged and scored zero
    assert np.all(pmap.flagged[labels == LABEL_NONE])
    assert np.all(pmap.values[pmap.flagged] == 0)


def test_bank_covers_catalog(perception_models):
    bank = perception_models.bank
    assert set(bank.labels()) == set(ITEM_IDS) | {BACKGROUND}
    assert len(CATALOG) == 40
    for v in bank.samples.values():
        assert v.shape[1] == 37


def test_item_forest_deterministic(perception_models):
    probe = perception_models.bank.samples[BACKGROUND][:50]
    a = train_item_forest(perception_models.bank, "command_hooks", tree_count=5)
    b = train_item_forest(perception_models.bank, "command_hooks", tree_count=5)
    np.testing.assert_array_equal(a.predict_proba(probe), b.predict_proba(probe))


# -- mean shift ---------------------------------------------------------------


def test_mean_shift_gaussian_blob():
    P = blob((40, 60), 6.0)
    res = mean_shift_mode(P)
    assert np.hypot(res.position[0] - 40, res.position[1] - 60) <= 2
    ref = kde_argmax(P, 5.0)
    assert np.hypot(res.pixel[0] - ref[0], res.pixel[1] - ref[1]) <= 2
    assert 0.5 < res.confidence <= 1.0


def test_mean_shift_uniform_patch():
    P = np.zeros((60, 80))
    P[10:31, 20:51] = 0.8
    res = mean_shift_mode(P)
    assert abs(res.position[0] - 35) <= 1 and abs(res.position[1] - 20) <= 1
    assert res.confidence == pytest.approx(0.8)


def test_mean_shift_prefers_heavier_blob():
    P = np.maximum(blob((25, 50), 5.0, peak=0.9), blob((75, 50), 5.0, peak=0.6))
    # the 0.9 blob carries more mass above threshold
    res = mean_shift_mode(P)
    ref = kde_argmax(P, 5.0)
    assert abs(res.pixel[0] - 25) <= 2
    assert np.hypot(res.pixel[0] - ref[0], res.pixel[1] - ref[1]) <= 2


def test_mean_shift_stays_on_support():
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = np.zeros((50, 50))
        for _ in range(3):
            c = rng.uniform(5, 45, 2)
            P = np.maximum(P, blob(c, rng.uniform(2, 6), (50, 50), rng.uniform(0.55, 1.0)))
        if not np.any(P > 0.5):
            continue
        res = mean_shift_mode(P)
        assert P[res.pixel[1], res.pixel[0]] > 0.5
        assert support_region(P, res.pixel).size > 0


def test_mean_shift_no_evidence():
    with pytest.raises(NoEvidenceError):
        mean_shift_mode(np.full((10, 10), 0.4))


def test_support_region_is_connected_component():
    P = np.zeros((20, 20))
    P[2:5, 2:5] = 0.9
    P[10:15, 10:15] = 0.9
    region = support_region(P, (3, 3))
    assert region.size == 9
    assert support_region(P, (0, 19)).size == 0


# -- suction target -----------------------------------------------------------


def test_suction_on_flat_face():
    face = box((0.0, 0.0, 0.5), (0.2, 0.2, 0.1))
    cloud = render_cloud([face], [], EYE, NOISELESS)
    n = estimate_normals(cloud)
    region = np.flatnonzero(cloud.labels == 0)
    t = suction_target(cloud, n, (40, 30), region, patch_radius=0.015)
    assert angle_deg(t.normal, np.array([0, 0, -1.0])) <= 2.0
    assert abs(t.point[2] - 0.45) <= 1e-9
    assert np.linalg.norm(t.normal) == pytest.approx(1.0, abs=1e-9)


def test_suction_patch_fit_absorbs_depth_noise():
    face = box((0.0, 0.0, 0.5), (0.2, 0.2, 0.1))
    errs = {None: [], 0.015: []}
    for seed in range(10):
        cloud = render_cloud([face], [], EYE, RenderSettings(noise_sigma_m=0.002),
                             np.random.default_rng(seed))
        n = estimate_normals(cloud)
        region = np.flatnonzero(cloud.labels == 0)
        for radius in errs:
            t = suction_target(cloud, n, (40, 30), region, patch_radius=radius)
            errs[radius].append(angle_deg(t.normal, np.array([0, 0, -1.0])))
    assert np.mean(errs[0.015]) < np.mean(errs[None])
    assert np.mean(errs[0.015]) <= 5.0


def test_suction_on_sphere():
    s = sphere((0.01, 0.0, 0.4), r=0.08)
    cloud = render_cloud([s], [], EYE, NOISELESS)
    n = estimate_normals(cloud)
    region = np.flatnonzero(cloud.labels == 0)
    t = suction_target(cloud, n, (42, 31), region)
    assert angle_deg(t.normal, t.point - s.center) <= 2.0


def test_centroid_of_full_sphere_surface(rng):
    # one rendered view only sees a cap whose pixel centroid sits ~2r/3 out,
    # so the full-surface case uses points sampled all around the sphere
    r, center = 0.08, np.array([0.01, 0.0, 0.4])
    d = rng.normal(size=(2000, 3))
    pts = center + r * d / np.linalg.norm(d, axis=1, keepdims=True)
    cloud = PointCloud(pts, np.zeros_like(pts), (len(pts), 1), np.zeros(3))
    n = estimate_normals(cloud, k=12, max_radius=0.05)
    i = int(np.argmin(pts[:, 2]))
    t = suction_target(cloud, n, (i, 0), np.arange(len(pts)))
    assert np.linalg.norm(t.centroid - center) <= r / 2


def test_suction_invalid_depth():
    cloud = render_cloud([sphere((0, 0, 0.5), r=0.02)], [], EYE, NOISELESS)
    n = estimate_normals(cloud)
    with pytest.raises(InvalidDepthError):
        suction_target(cloud, n, (0, 0), [])
