"""wfrevive: revival engine for decayed legacy scientific workflows.

Parses Taverna-era workflow documents (t2flow, SCUFL), lowers them to a
DAG intermediate representation, substitutes retired service endpoints,
synthesizes a single-file Python pivot script, validates it in a sandbox,
emits a Snakemake workflow, and packages everything into a self-contained
revival bundle with provenance. Curator checkpoints pause the pipeline
wherever a human decision is needed.
"""

__version__ = "0.1.0"
