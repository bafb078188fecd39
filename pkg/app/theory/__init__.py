"""States, channels, entropies and compression in Bilocal Classical Theory."""
