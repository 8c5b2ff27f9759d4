"""HTTP/SSE service exposing live runs."""
