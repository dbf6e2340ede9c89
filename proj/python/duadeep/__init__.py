# SPDX-FileCopyrightText: 2026 DuaDeep contributors
#
# SPDX-License-Identifier: Apache-2.0

"""Python bindings for the DuaDeep sequence affinity regressor."""

import json

from ._core import (
    DuaDeepError,
    Model,
    clean_sequence,
    embed_dataset,
    embedding_header,
    gradcheck,
    kd_in_range,
    kd_to_pkd,
    mae,
    pearson,
    preprocess_csv,
    r2,
    read_embeddings,
    rmse,
    roc_auc,
    sequence_id,
    spearman,
    synthetic_embed,
    tokenize,
    write_embeddings,
)
from . import _core

__all__ = [
    "DuaDeepError",
    "Model",
    "clean_sequence",
    "create_model",
    "embed_dataset",
    "embedding_header",
    "gradcheck",
    "kd_in_range",
    "kd_to_pkd",
    "mae",
    "model_config",
    "pearson",
    "preprocess_csv",
    "r2",
    "read_embeddings",
    "rmse",
    "roc_auc",
    "sequence_id",
    "spearman",
    "synthetic_embed",
    "tokenize",
    "train",
    "write_embeddings",
]


def create_model(config=None):
    """Freshly initialized model from a config dict (missing keys use defaults)."""
    return Model.create(json.dumps(config or {}))


def model_config(model):
    return json.loads(model.config_json)


def train(dataset, embeddings, model=None, train=None):
    """Train on a dataset directory; returns (model, [(epoch, train_rmse, val_rmse), ...])."""
    return _core.train_model(dataset, embeddings, json.dumps(model or {}), json.dumps(train or {}))
