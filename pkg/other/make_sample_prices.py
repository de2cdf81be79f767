import os
import sys

from dotenv import load_dotenv

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from data_utils import sample_to_prices  # noqa: E402
from domain import storage  # noqa: E402
from model_utils import sample_model  # noqa: E402

load_dotenv()

PARAMS = os.getenv("SAMPLE_PARAMS", os.path.join(os.path.dirname(__file__), "params", "reference_model1.json"))
OUT = os.getenv("SAMPLE_OUT", "sample_prices.csv")
ROWS = int(os.getenv("SAMPLE_ROWS", "153"))
SEED = int(os.getenv("SAMPLE_SEED", "2013"))

try:
    params = storage.load_params(PARAMS)
    sample = sample_model(params, ROWS, SEED)
    storage.save_prices(sample_to_prices(sample), OUT)
    print(f"Wrote {ROWS + 1} weekly closes for {params.n} assets to {OUT}")
except Exception as e:
    print(f"An unexpected error occurred: {e}")
    sys.exit(1)
