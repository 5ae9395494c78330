"""Figure rendering for sampler experiment CSVs.

Reads only the public CSV schema emitted by the experiment harness
(run_id,k,metric,value,d,axis_value,config_hash,seed); it never imports the
sampler package itself.
"""

__version__ = "0.1.0"
