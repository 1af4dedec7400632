from ahsp.seeds import derive_seed, make_rng, node_seeds, trial_seed


def test_seeds_are_deterministic_and_distinct():
    assert trial_seed(1, 0) == trial_seed(1, 0)
    assert len({trial_seed(1, t) for t in range(100)}) == 100
    assert node_seeds(5, 3) == node_seeds(5, 3)
    assert len(set(node_seeds(5, 3))) == 3
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


def test_make_rng_reproducible():
    assert make_rng(4).random() == make_rng(4).random()
