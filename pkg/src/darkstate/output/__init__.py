"""Result serialization and reports."""
