"""Network engines: graphs, statistics, sampling, estimation, baselines, ingestion and evaluation."""
