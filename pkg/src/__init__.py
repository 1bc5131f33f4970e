# Bayesian and classical unit root testing toolkit
