from embed_export.export import (EMBEDDING_MAGIC, ExportError, ExportManifest,
                                 char_pool, export, read_corpus_texts,
                                 write_embeddings)

__all__ = ["EMBEDDING_MAGIC", "ExportError", "ExportManifest", "char_pool",
           "export", "read_corpus_texts", "write_embeddings"]
