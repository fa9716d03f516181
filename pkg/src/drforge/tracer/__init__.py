"""Monte Carlo path tracer: BRDF, environment sampling, BVH, render kernels."""
