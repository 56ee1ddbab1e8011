"""spotex — Wi-Fi network-proximity rules, fingerprints, check-ins and convoys."""

__version__ = "0.3.0"
