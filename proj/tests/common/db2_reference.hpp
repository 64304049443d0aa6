#pragma once

// Reference multilevel DWT of a fixed random signal (db2, symmetric extension,
// 3 levels), produced once with PyWavelets 1.8.0 and frozen here.

#include <vector>

namespace trits::testing::db2_ref {

inline const std::vector<double> kSignal = {
    -0.21118912055729136, -0.51773347098452549, 0.14959583696246229, -1.7898968436779759,
    0.28445225356918419, -0.32169560648369011, -0.72605032444930195, 0.098537275131296675,
    -1.9514738484064804, -0.15841288562715672, -0.73128486538044479, 0.40969535789355127,
    0.44244173776631784, -0.92786269077022909, -0.93316795277184994, -1.4700371639889616,
    -0.78768929408678934, 0.31941439201629979, 0.85727036612476737, 0.22879972296310866,
    0.034799252655156078, -0.86744711044345668, 0.19577021284431775, -0.81568953152567014,
    0.23962888489868106, -0.20259332624012352, 0.85601810348543272, 0.20247035255397891,
    1.3688252896097017, -0.40821444747159008, 0.75594508244663228, 0.22516072407457527,
    1.6965558201068938, -1.9620539547190585, 0.87425829518133136, -1.0236516100709405,
    -0.86864673897500544, -0.018363115062379937, -1.5105593611064696, -1.1945810265785586,
    -0.50554187491925473, -0.32248383162699573, -1.9036789280897755, -0.87363123823735978,
    -0.14591356690623353, -0.13192758477062216, -0.66230815722241565, -0.0040887891062968878,
    -0.51337442708578374, 1.1734987782299331, -0.80913518200791157, 0.05910379879897925,
    -0.48959500628028563, 0.85456245313108592, -0.97154851156887267, 0.8766026328650387,
    -1.1953017929996643, -1.3669968971215469, -0.54846957361036652, 0.092126856271190438,
    -1.5210236133299682, -0.50418945543351434, -0.0039704657093184862, -0.035557653895964332,
    0.8755659365466596, 0.78427353478552075, 0.33283124809261638, 0.91343303505143325,
    0.9397262079681602, -1.1091623712921952, 2.185262079056387, -0.048926982700459233,
    -0.60594239525049542, 0.60014932169664204, -0.48857715159337178, 0.62715703212792084,
    -1.2013988771197082, 0.72535847037567969, -1.2638736463683906, 0.37573256013276879,
    -0.21322506082178258, -0.50148296923746227, 0.15307345336369499, -0.5753083988801887,
    -0.77194294616513692, 0.39490647743784379, 1.9312068474400939, -0.99775687536779356,
    1.1551673162548703, 1.0815576939107636, -1.1200802383514654, 0.1902346053615725,
    0.52403909638595736, -0.9108560639633887, 1.0792177692115461, 0.87790979009840131};

inline const std::vector<double> kA3 = {
    -0.7990080363193528, -0.8526349903857926, -1.6044308485583507, -0.98572575258305473,
    0.1305526669676578, 0.64370431851092713, -2.4132933085059034, -0.38433905225280784,
    -1.5734698495851633, 0.48298541118496341, 0.77052302330217481, -0.86060249880455997,
    0.66899906897548045, 1.6732165521332658};

inline const std::vector<double> kD3 = {
    0.09262039228911495, 0.10637950874027598, 0.028614524138862521, 0.043638844881449812,
    0.9619668449590647, -0.19396374919783493, -0.51634681849085962, 0.95707465932864766,
    -1.3620181366009985, 0.37967154711091333, -0.11885046165626847, -0.32402472768493878,
    -1.2788801429391319, 1.1821888908236859};

inline const std::vector<double> kD2 = {
    -0.083967281259618387, -0.84234837538121865, 0.29046231964877423, 0.83369187627279151,
    -1.5084613004215168, 1.1116429866667772, -0.4473904527018987, 0.60687365522051817,
    1.0067559913160764, -0.2681704863936164, -0.88661335583113621, -0.81624797289490503,
    -0.46753540432479868, -0.58664416885673132, 1.0806700137274841, 0.56249644583864944,
    -0.12889655137480177, 0.8189876236827569, 0.49051640836270471, -0.022682047111659762,
    0.044513899535651928, -0.6502929675701864, -0.42644812109827285, -0.23287803190405992,
    0.56837666199420867, -0.71171778474850023};

inline const std::vector<double> kD1 = {
    0.1877193105199105, 1.1329698165019535, 0.7751512710999483, -0.61964751594034428,
    -1.4840608419469379, -0.52155280019179107, 0.82103751826885707, 0.080081783011573413,
    -0.362919606721467, 0.63695857537741163, 0.28583192197306695, 0.74764236318305022,
    0.45579580903242811, 0.63268722076414163, 1.1860377284131434, 0.43797584503467307,
    2.2185010096189473, 1.445948965298423, -0.60146057295349631, -0.57014206134991263,
    0.19609248786549158, -1.0328222665311757, 0.38383031916718885, -0.50360347393806837,
    -0.90957700727094348, -0.90199673031917593, -0.73081413330591116, -1.3642694087602902,
    -0.4104381098865596, -0.04221018885377148, -0.97852872700814775, 0.32369758316799147,
    0.36213399601105717, -0.45183218764847632, 1.0739686374250601, 1.9786396994530506,
    -1.0685575966272607, -0.76770141448215723, -1.4326578550633811, -1.2458280010420486,
    0.14317057173655545, 0.54589874548686268, -0.72732535545856669, 2.1087464836436292,
    0.41768856834272389, -1.4207558159489786, 0.98058607461298042, 0.61513254166975173,
    -0.12327545749451466};

}  // namespace trits::testing::db2_ref
