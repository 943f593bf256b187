"""
Version handling module
"""

version_str = '0.3.0'


def get_version() -> str:
    """
    Returns:
        str: version of the tool, echoed in every JSON report
    """
    return version_str
