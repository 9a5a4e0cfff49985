"""Mean-field principal-agent contracting with accident jumps."""
