"""US monetary spillovers to emerging markets: panel SVARs, firm-panel
regressions and a two-period model of entrepreneurs facing a leverage
constraint."""

__version__ = "0.1.0"
