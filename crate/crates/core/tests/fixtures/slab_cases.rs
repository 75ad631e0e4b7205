// Frozen output of an independent slab solver: scipy brentq on
// `h d = m pi + atan(w_top q / h) + atan(w_bottom p / h)`, random cases with
// seed 20261016.
// (n_core, n_top, n_bottom, thickness nm, wavelength nm, polarization, n_eff by order)
const CASES: &[Case] = &[
    (2.2134378520040308, 1.6523285379012917, 1.7724512228647757, 1143.4827145922318, 1096.45908209716, Polarization::TE, &[2.1783739471872137, 2.072131689878914, 1.8950056230007797]),
    (2.1576583946646375, 1.6496510605208217, 1.940223417190278, 730.4644213570418, 1069.1349838157769, Polarization::TE, &[2.0962881786674705, 1.9414346749025366]),
    (3.162884947809715, 2.7148581636019395, 2.326071019689735, 1960.8537998544423, 1443.1744594580118, Polarization::TE, &[3.146001370475446, 3.0950736148828097, 3.009371377326791, 2.8883532543307924, 2.737571973526555]),
    (3.0989537120250144, 2.5250165997712033, 2.232774181061254, 1023.2544429287137, 1209.8347176935777, Polarization::TM, &[3.0535404008761624, 2.917133608194159, 2.6960186213939368]),
    (2.947056059770574, 1.884691989838146, 1.8177812647805862, 1167.4754828114212, 860.3738315467258, Polarization::TE, &[2.9280501115750095, 2.8704378112020588, 2.772359179274593, 2.630457600940828, 2.439565307874607, 2.1931989035344435, 1.900867580935685]),
    (3.0574132168927495, 1.0567458969209593, 1.4481761307651195, 1371.9545641650725, 1718.9723116090918, Polarization::TE, &[3.0080166370470827, 2.855815372773817, 2.5870716245769705, 2.1717213314896, 1.5580669238477274]),
    (3.2227116720382405, 1.5475345970884276, 2.8620591098387544, 1440.4707882054174, 1586.568195325493, Polarization::TM, &[3.18436770296974, 3.070103968857902, 2.894100125025098]),
    (2.714262622288798, 1.129217589246735, 2.5779018405968106, 2182.4371120367196, 959.0979752120577, Polarization::TM, &[2.7066293377550608, 2.683790810212313, 2.6461203681852767, 2.5958096970887823]),
    (3.00895958354353, 2.2317271836502046, 1.9106332138592363, 1575.0589742687682, 1427.3746270963347, Polarization::TE, &[2.9823248588807383, 2.9014377451763163, 2.76331710625209, 2.5633306748983906, 2.3019545919188955]),
    (2.5175474283705017, 1.1341968481675013, 1.0923798535131943, 2424.9026810739647, 865.4614969036842, Polarization::TE, &[2.5118081809685346, 2.4945175675299094, 2.465452329618762, 2.4242241944898777, 2.370253000876045, 2.3027231056116797, 2.2205150317410567, 2.1220980410843344, 2.0053576877907955, 1.86731064164354, 1.703623532766675, 1.5078660083263777, 1.2718062514232065]),
    (3.2735107653463964, 1.2843167685353534, 3.0598175369583327, 465.6427877624769, 984.7273357941516, Polarization::TE, &[3.188497451647944]),
    (2.5073339620136883, 1.6415934083198689, 1.1826757188085102, 1890.8666617698939, 1397.2436848349425, Polarization::TM, &[2.481989419646735, 2.40473167017978, 2.2717753574680066, 2.076963294067188, 1.8183690919904731]),
    (2.332684264417469, 1.6074856222291047, 1.831668041062752, 258.6472134002155, 1288.6714286009017, Polarization::TE, &[2.0255845483041433]),
    (2.6308334444711288, 1.683520774233084, 2.085819943106703, 2106.0604577109866, 1788.3482255767244, Polarization::TM, &[2.6014075853855734, 2.5123429385995157, 2.362461866348337, 2.160525866349914]),
    (3.46496631007507, 2.1543894278306945, 3.2480331564070397, 1127.7558232023653, 1771.5842420931922, Polarization::TM, &[3.4058799324126614, 3.255920536104782]),
    (3.3800551026703984, 1.4566077687623236, 1.0594381432895448, 671.6628055014558, 1169.3993760353987, Polarization::TM, &[3.271903842100537, 2.9271554701779, 2.2689320732885094, 1.465859692503952]),
    (2.0027517679081104, 1.3890125839235374, 1.9039865477104942, 690.05718240274, 1489.2131212325853, Polarization::TE, &[1.923289210416698]),
    (2.988720280819042, 2.4127993301286095, 2.071933499915102, 1199.2848964305467, 1101.9347558705902, Polarization::TE, &[2.9619906311627, 2.881006308702138, 2.743646296734532, 2.549048499839794]),
    (2.7721812496406706, 2.1207214992465517, 2.553118624165514, 440.1956605465369, 1513.7118150127567, Polarization::TE, &[2.6233601113756757]),
    (3.1364001953848133, 2.347514638314414, 2.0924248649712176, 2298.7282992801483, 1689.6199693230428, Polarization::TE, &[3.1187713254055502, 3.0654434396225803, 2.9750679169726597, 2.845355039312784, 2.673318391894163, 2.458187927731716]),
    (2.2214672654452765, 2.0833945650836445, 1.9681379735624114, 1827.814030745694, 1662.268018520006, Polarization::TE, &[2.195302434876737, 2.121149503459374]),
    (2.871709371852292, 2.7007851752349623, 2.005719061466031, 1886.4426524247156, 1792.8049676764986, Polarization::TE, &[2.8457472456865163, 2.76971922313505]),
    (3.3662305552795573, 1.1132920237882817, 3.134076591639345, 207.3166266262863, 936.9108645359919, Polarization::TE, &[3.1672664883627277]),
    (3.240132549560025, 1.886249827016499, 2.9889016436992972, 2101.3945025247285, 1242.4377429253088, Polarization::TM, &[3.2284848665722934, 3.193536176175333, 3.1354537202982176, 3.0557160483800714]),
];
