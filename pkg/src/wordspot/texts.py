"""Default source text for synthetic corpus generation.

Original filler prose. The generator only uses it as a vocabulary with a
natural first-appearance order; sampling weights are assigned separately.
"""

DEFAULT_SOURCE_TEXT = """
The harbor town wakes before the light arrives. Fishing boats knock gently
against the old stone pier while gulls argue over scraps near the market
square. A baker slides warm loaves onto wooden shelves, and the smell of
bread drifts down narrow streets toward the water. Ropes creak, sails
unfold, and the first crews push away from the dock into a calm grey sea.

Inland, the valley keeps a different rhythm. Farmers walk their fields
checking young barley for frost damage, while smoke climbs from chimneys in
thin straight lines. An old miller repairs the wooden wheel beside the
river, replacing each broken spoke with careful patience. Children carry
baskets of apples along the lane, trading stories about the storm that bent
the orchard fence last winter.

The chandler sells sails and nails from the same counter, rails for wagon
beds, tails of rope too short to coil, and pails of pitch. Farmers mend
what the season broke: they bend new hoops, send word upriver, tend the
lame mare, and lend each other harrows. A cook kneads bread while carters
tread mud from their boots, dreading the long haul to the mill. Coopers
stack a crate beside a grate, balance a plate on a slate, and argue
whether the stock left in the stick shed will last.

By noon the market fills with voices. Merchants weigh salted fish against
iron counters, a potter stacks glazed bowls in unsteady towers, and weavers
hang bright cloth between crooked posts. Travelers from the northern hills
barter wool for candles, nails, honey, and dried plums. A scribe sits under
a canvas awning copying letters for sailors who never learned to write,
charging a copper coin for every page.

When evening settles, lanterns appear one by one along the seawall. The
lighthouse keeper climbs a spiral stair to trim the great wick, watching
distant clouds for signs of weather. Fishermen mend torn nets beside small
fires, telling the same jokes their fathers told, while the tide slides
quietly over dark sand. Somewhere a fiddle starts a slow tune, and dancers
turn circles outside the tavern door.

Seasons shape every habit of the town. Spring brings repairs to hulls and
roofs, summer brings long days of heavy catches, autumn brings barrels of
cider and the sharp smell of smoked herring. Winter closes the harbor mouth
with fog, so people gather indoors to carve, stitch, and argue about maps.
Each year the council paints the pier rails green again, and each year the
salt air peels them pale before the festival returns.

Strangers who visit often ask why anyone stays through the hard months. The
answer waits in small things: the steady noise of water under the planks,
the careful work of hands that know their craft, bread shared across a
table, and the plain certainty that tomorrow the boats will go out again.

The harbormaster keeps meticulous records in a leather ledger: cargo
manifests, thunderstorms logged hour by hour, the shipwrights and their
apprenticeships, even complaints about the candlemakers whose wax blocks
the gutters. Administration suits him, the townspeople say, because the
lighthouse taught him patience with troublesome complications.
"""
