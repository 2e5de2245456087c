import numpy as np
import pytest

from poolslp.instance import Bin, PoolingInstance, Product, Raw


@pytest.fixture
def toy_1x1x1():
    """1 raw, 1 bin, 1 product; the raw's composition sits inside the window."""
    return PoolingInstance(
        nutrients=("n1",),
        raws=(Raw("r0", 1.0, 2.0, (0.5,)),),
        bins=(Bin("b0"),),
        products=(Product("p0", 10.0, (0.4,), (0.6,)),),
        bin_arcs=((0, 0),),
        product_arcs=((0, 0),),
        straight_arcs=((0, 0),),
    )


@pytest.fixture
def toy_2raw():
    """2 raws with distinct compositions, 1 bin, 1 product, straights allowed.

    Optimal blend hits the cheap end of the window: lam = (0.75, 0.25),
    unit cost 1.5, objective 15."""
    return PoolingInstance(
        nutrients=("n1",),
        raws=(Raw("cheap", 1.0, 2.1, (0.2,)), Raw("rich", 3.0, 6.3, (1.0,))),
        bins=(Bin("b0"),),
        products=(Product("p0", 10.0, (0.4,), (0.6,)),),
        bin_arcs=((0, 0), (1, 0)),
        product_arcs=((0, 0),),
        straight_arcs=((0, 0), (1, 0)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
