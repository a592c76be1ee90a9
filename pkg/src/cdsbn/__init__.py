"""Keyword-aware bitruss community detection over streaming bipartite graphs."""
