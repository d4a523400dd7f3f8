import sys

import numpy as np
import pytest

TOY_TRAIN = """\
q1\twhat is red\tred is a colour\t1
q1\twhat is red\ta dog barks\t0
q1\twhat is red\tthe sky\t0
q2\twhere is paris\tparis is in france\t1
q2\twhere is paris\tfish swim\t0
"""

TOY_DEV = """\
d1\twhat is blue\tblue is a colour\t1
d1\twhat is blue\tcats sleep\t0
d2\twho barks\ta dog barks\t1
d2\twho barks\tthe sky\t0
d3\twhat swims\tthe sky\t0
"""

WORDS = "what is red a colour dog barks the sky where paris in france fish swim blue cats sleep who swims".split()


@pytest.fixture
def toy_files(tmp_path):
    """Toy train/dev splits and 6-dimensional vectors for every word except ``swims``."""
    rng = np.random.default_rng(42)
    (tmp_path / "train.tsv").write_text(TOY_TRAIN, encoding="utf-8")
    (tmp_path / "dev.tsv").write_text(TOY_DEV, encoding="utf-8")
    lines = []
    for word in WORDS:
        if word == "swims":
            continue
        vec = rng.normal(scale=0.2, size=6)
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    (tmp_path / "vectors.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
