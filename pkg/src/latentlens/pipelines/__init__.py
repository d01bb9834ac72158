"""Stage pipelines run by ``kedro run`` and the ``latentlens`` CLI."""
