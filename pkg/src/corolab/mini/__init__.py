"""MiniLang: the small imperative language compiled by the splitting pipeline."""
