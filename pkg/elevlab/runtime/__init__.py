"""Process runtime: environment settings and logging."""
