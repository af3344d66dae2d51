import numpy as np
import pytest

from metrosim.packages.streams import Phase, stream
from metrosim.packages.transactions import HIRE_HEADER, TransactionLog


class TestStream:
    def test_same_cell_same_numbers(self):
        a = stream(3, 12, Phase.GOODS, 7).random(5)
        b = stream(3, 12, Phase.GOODS, 7).random(5)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize(
        "other",
        [(4, 12, Phase.GOODS, 7), (3, 13, Phase.GOODS, 7), (3, 12, Phase.LABOR, 7), (3, 12, Phase.GOODS, 8)],
    )
    def test_cells_differ(self, other):
        assert not np.array_equal(stream(3, 12, Phase.GOODS, 7).random(5), stream(*other).random(5))

    def test_independent_of_other_draws(self):
        expected = stream(1, 0, Phase.HOUSING).random(3)
        stream(1, 0, Phase.LABOR).random(1000)
        assert np.array_equal(stream(1, 0, Phase.HOUSING).random(3), expected)

    def test_draws_follow_position_in_vector(self):
        small = stream(1, 0, Phase.DEMOGRAPHY).random(3)
        large = stream(1, 0, Phase.DEMOGRAPHY).random(5)
        assert np.array_equal(large[:3], small)
        # a vector drawn after another one starts where the first stopped
        rng = stream(1, 0, Phase.DEMOGRAPHY)
        rng.random(2)
        assert np.array_equal(rng.random(3), large[2:])

    def test_negative_seed(self):
        with pytest.raises(ValueError):
            stream(-1, 0, Phase.GENERATION)


def test_transaction_log_files(tmpdir):
    log = TransactionLog()
    log.purchase(0, 2, 1, 10.0, 4.0, 2.5)
    log.hire(1, 0, 5, "distance")
    paths = log.write(str(tmpdir))
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["purchases.csv", "house_sales.csv", "hires.csv"]
    assert tmpdir.join("purchases.csv").read() == "month,family,firm,money_spent,units,tax_paid\n0,2,1,10.0,4.0,2.5\n"
    assert tmpdir.join("house_sales.csv").read() == "month,house,buyer,seller,price\n"
    assert tmpdir.join("hires.csv").read().splitlines() == [",".join(HIRE_HEADER), "1,0,5,distance"]
