"""Command-line surface of the pose lifter."""
