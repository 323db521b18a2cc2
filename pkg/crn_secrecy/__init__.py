"""CRN secrecy outage toolkit - pip install crn-secrecy-outage && sop selftest"""

__version__ = "1.0.0"
