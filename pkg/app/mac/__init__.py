"""802.11ax uplink MAC: frame airtime, opportunistic observation, TWT accounting and the simpy timeline."""
