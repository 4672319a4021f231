import io
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ipakit import default_table, load_dictionary


TOY_DICTIONARY = """\
a\tə
photo\tˈfoʊˌtoʊ
of\təv
cat\tkæt
dog\tdɔg
desk\tdɛsk
chair\tʧɛɹ
read\tɹid, ɹɛd
snail\tsneɪl
egg\tɛg
every\tˈɛvəɹi
everyday\tˈɛvəɹiˌdeɪ
day\tdeɪ
sit\tsɪt
pit\tpɪt
sat\tsæt
tass\ttæs
block\tblɑk
plane\tpleɪn
the\tðə
bridge\tbɹɪʤ
fish\tfɪʃ
thing\tθɪŋ
year\tjɪɹ
"""


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture(scope="session")
def toy_dictionary(table):
    return load_dictionary(io.StringIO(TOY_DICTIONARY), table)
