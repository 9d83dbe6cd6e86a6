import pytest
import torch
from transformers import LlamaConfig, LlamaForCausalLM, PreTrainedTokenizerFast
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace

WORDS = ["the", "cat", "sat", "on", "a", "mat", "and", "dog", "ran", "far"]


def build_tiny_model(num_blocks=2, seed=0):
    config = LlamaConfig(
        hidden_size=32,
        intermediate_size=64,
        num_hidden_layers=num_blocks,
        num_attention_heads=4,
        num_key_value_heads=4,
        vocab_size=64,
        max_position_embeddings=128,
    )
    torch.manual_seed(seed)
    return LlamaForCausalLM(config).eval()


def build_tokenizer():
    vocab = {"<unk>": 0, "<pad>": 1}
    for i, w in enumerate(WORDS, start=2):
        vocab[w] = i
    tok = Tokenizer(WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = Whitespace()
    return PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="<unk>", pad_token="<pad>"
    )


@pytest.fixture(scope="session")
def tiny_model():
    return build_tiny_model()


@pytest.fixture(scope="session")
def tokenizer():
    return build_tokenizer()


@pytest.fixture(scope="session")
def saved_model_dir(tmp_path_factory):
    """A complete local model directory loadable via from_pretrained."""
    d = tmp_path_factory.mktemp("tinylm")
    build_tiny_model().save_pretrained(d)
    build_tokenizer().save_pretrained(d)
    return d


@pytest.fixture
def prompts_file(tmp_path):
    path = tmp_path / "prompts.txt"
    path.write_text("the cat sat on a mat\ndog ran far\nthe dog and the cat\n")
    return path


@pytest.fixture
def encode(tokenizer):
    return lambda text: tokenizer(text)["input_ids"]
